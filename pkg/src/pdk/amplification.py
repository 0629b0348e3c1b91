"""Excitation-number noise of linear and nonlinear amplification schemes.

Six schemes are covered:

* linear phase-insensitive and phase-sensitive amplification,
* nonlinear amplification of every input excitation into ``G`` excitations of
  one auxiliary mode (``SINGLE_MODE``) or one excitation in each of ``G``
  modes (``G_MODES``),
* cascades of ``N`` such steps with per-step gain ``g`` (``G = g^N``).

Inputs are characterised by their mean and variance of excitation number.
SNRs assume a fixed input photon number ``n_a`` (zero input variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ParameterError


class Kind(str, Enum):
    LINEAR_PHASE_INSENSITIVE = "LinearPhaseInsensitive"
    LINEAR_PHASE_SENSITIVE = "LinearPhaseSensitive"
    SINGLE_MODE = "SingleMode"
    G_MODES = "GModes"
    MULTI_STEP_SINGLE_MODE = "MultiStepSingleMode"
    MULTI_STEP_MULTI_MODE = "MultiStepMultiMode"

    @property
    def linear(self) -> bool:
        return self in (Kind.LINEAR_PHASE_INSENSITIVE, Kind.LINEAR_PHASE_SENSITIVE)

    @property
    def multi_step(self) -> bool:
        return self in (Kind.MULTI_STEP_SINGLE_MODE, Kind.MULTI_STEP_MULTI_MODE)


@dataclass(frozen=True)
class NumberStats:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (self.mean >= 0 and self.variance >= 0):
            raise ParameterError("mean and variance must be non-negative", mean=self.mean, variance=self.variance)

    @classmethod
    def thermal(cls, n_bar: float) -> "NumberStats":
        """Geometric (thermal) law: variance ``n_bar (n_bar + 1)``."""
        return cls(float(n_bar), float(n_bar * (n_bar + 1.0)))

    @classmethod
    def fock(cls, n: float) -> "NumberStats":
        return cls(float(n), 0.0)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class AmplifierScheme:
    """Gain structure.  ``g`` and ``N`` are only used by multi-step kinds.

    When only one of ``g`` and ``N`` is given the other follows from
    ``G = g^N``.
    """

    kind: Kind
    G: float
    g: Optional[int] = None
    N: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        G = self.G
        if not (np.isfinite(G) and G >= 1):
            raise ParameterError("gain must be at least one", G=G)
        if self.kind.linear:
            return
        if G != int(G):
            raise ParameterError("nonlinear schemes need an integer gain", G=G)
        object.__setattr__(self, "G", int(G))
        if not self.kind.multi_step:
            return
        g, n = self.g, self.N
        if g is None and n is None:
            raise ParameterError("multi-step schemes need g or N")
        if g is None:
            root = round(G ** (1.0 / n))
            g = int(root)
        if n is None:
            if g < 2:
                raise ParameterError("per-step gain must be at least two", g=g)
            n = int(round(math.log(G) / math.log(g)))
        if g != int(g) or g < 2 or n < 1 or int(g) ** int(n) != G:
            raise ParameterError("multi-step schemes need integer g >= 2, N >= 1 and g^N = G", G=G, g=g, N=n)
        object.__setattr__(self, "g", int(g))
        object.__setattr__(self, "N", int(n))


# ---------------------------------------------------------------------------
# closed forms


def output_variance(scheme: AmplifierScheme, input: NumberStats, reservoir: NumberStats) -> float:
    """Variance of the amplified excitation number.

    ``reservoir`` describes the auxiliary (or each reservoir) mode; the
    multi-step kinds assume independent, identical reservoirs at every step.
    """
    G = float(scheme.G)
    va, vb = input.variance, reservoir.variance
    na, nb = input.mean, reservoir.mean
    k = scheme.kind
    if k is Kind.LINEAR_PHASE_INSENSITIVE:
        return G * G * va + (G - 1) ** 2 * vb + G * (G - 1) * (2 * na * nb + na + nb + 1)
    if k is Kind.LINEAR_PHASE_SENSITIVE:
        return (6 * G * (G - 1) + 1) * va + 2 * G * (G - 1) * (na * na + na + 1)
    if k is Kind.SINGLE_MODE:
        return vb + G * G * va
    if k is Kind.G_MODES:
        return G * vb + G * G * va
    g = float(scheme.g)
    if k is Kind.MULTI_STEP_SINGLE_MODE:
        return (G * G - 1) / (g * g - 1) * vb + G * G * va
    return G * (G - 1) / (g - 1) * vb + G * G * va


def snr(scheme: AmplifierScheme, n_a: float, delta_n_b: float) -> float:
    """Signal-to-noise ratio for a fixed input photon number ``n_a``.

    The two linear kinds return their upper bounds and ``math.inf`` at
    ``G = 1``, where they add no noise.  The phase-sensitive bound does not
    involve ``delta_n_b`` (it counts noise in units of the input mode).
    """
    if n_a < 0 or n_a != int(n_a):
        raise ParameterError("photon number must be a non-negative integer", n_a=n_a)
    if not delta_n_b > 0:
        raise ParameterError("reservoir fluctuations must be positive", delta_n_b=delta_n_b)
    G = float(scheme.G)
    k = scheme.kind
    if k.linear and G == 1:
        return math.inf
    if k is Kind.LINEAR_PHASE_INSENSITIVE:
        return G / (G - 1) * n_a / delta_n_b
    if k is Kind.LINEAR_PHASE_SENSITIVE:
        return (2 * G - 1) / math.sqrt(2 * G * (G - 1)) * n_a
    if k is Kind.SINGLE_MODE:
        return G * n_a / delta_n_b
    if k is Kind.G_MODES:
        return math.sqrt(G) * n_a / delta_n_b
    g = float(scheme.g)
    if k is Kind.MULTI_STEP_SINGLE_MODE:
        return G * math.sqrt(g * g - 1) * n_a / (math.sqrt(G * G - 1) * delta_n_b)
    return math.sqrt(G * (g - 1)) * n_a / (math.sqrt(G - 1) * delta_n_b)


@dataclass(frozen=True)
class Units:
    """Physical constants; natural units by default."""

    hbar: float = 1.0
    k_B: float = 1.0

    @classmethod
    def si(cls) -> "Units":
        return cls(hbar=1.054571817e-34, k_B=1.380649e-23)


def thermal_occupation(omega: float, kT: float, *, hbar: float = 1.0) -> float:
    """Bose-Einstein occupation ``1 / (exp(hbar omega / kT) - 1)``; zero at ``kT = 0``."""
    if not omega > 0:
        raise ParameterError("mode frequency must be positive", omega=omega)
    if kT < 0:
        raise ParameterError("thermal energy must be non-negative", kT=kT)
    if kT == 0:
        return 0.0
    x = hbar * omega / kT
    if x > 745:
        return 0.0
    return float(math.exp(-x) / -math.expm1(-x))


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MonteCarloStats:
    stats: NumberStats
    mean_stderr: float
    variance_stderr: float
    samples: int


def _thermal_sum(rng: np.random.Generator, modes: int, n_bar: float, size: int) -> np.ndarray:
    """Total occupation of ``modes`` independent thermal modes."""
    if n_bar == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.negative_binomial(modes, 1.0 / (1.0 + n_bar), size=size)


def monte_carlo_ideal(
    scheme: AmplifierScheme,
    n_a: int,
    n_bar: float,
    samples: int = 100_000,
    *,
    seed=None,
) -> MonteCarloStats:
    """Sample the ideal number-transfer maps with thermal reservoirs.

    Every reservoir mode starts in a thermal state with mean ``n_bar``; the
    map then adds exactly ``G n_a`` excitations (one mode) or ``n_a`` to each
    of ``G`` modes.  Multi-step kinds feed each step's output into the next,
    so noise added at step ``k`` is multiplied by ``g^(N-k)``.  Phases play no
    role in number statistics and are not tracked.
    """
    if scheme.kind.linear:
        raise ParameterError("Monte Carlo covers the nonlinear schemes only", kind=scheme.kind.value)
    if samples < 2:
        raise ParameterError("need at least two samples", samples=samples)
    if n_a < 0 or n_bar < 0:
        raise ParameterError("photon number and occupation must be non-negative")
    rng = np.random.default_rng(seed)
    G = scheme.G
    k = scheme.kind
    if k is Kind.SINGLE_MODE:
        out = _thermal_sum(rng, 1, n_bar, samples).astype(float) + G * n_a
    elif k is Kind.G_MODES:
        out = _thermal_sum(rng, G, n_bar, samples).astype(float) + G * n_a
    else:
        g, N = scheme.g, scheme.N
        out = np.full(samples, float(G * n_a))
        for step in range(1, N + 1):
            modes = 1 if k is Kind.MULTI_STEP_SINGLE_MODE else g**step
            out += float(g ** (N - step)) * _thermal_sum(rng, modes, n_bar, samples)
    mean = float(out.mean())
    c = out - mean
    var = float(np.mean(c * c)) * samples / (samples - 1)
    m4 = float(np.mean(c**4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / samples)
    return MonteCarloStats(NumberStats(mean, var), math.sqrt(var / samples), var_se, samples)


# ---------------------------------------------------------------------------
# sweeps


def snr_sweep(G_values, n_a: int, delta_n_b: float, g: int = 2) -> list[dict]:
    """SNR and fixed-input variance of all six kinds over a list of gains.

    Multi-step kinds are skipped at gains that are not powers of ``g``.
    """
    rows = []
    reservoir = NumberStats(0.0, delta_n_b**2)
    for G in G_values:
        for kind in Kind:
            try:
                sch = AmplifierScheme(kind, G, g=g if kind.multi_step else None)
            except ParameterError:
                continue
            rows.append(
                {
                    "scheme": kind.value,
                    "G": sch.G,
                    "g": sch.g,
                    "N": sch.N,
                    "variance": output_variance(sch, NumberStats.fock(n_a), reservoir),
                    "snr": snr(sch, n_a, delta_n_b),
                }
            )
    return rows
