"""Single-photon detector POVM: weights, projected state and figures of merit.

The click element of a filter-trigger-amplifier detector is

    Pi = w0 |vac><vac| + wT |T Psi_T><T Psi_T|,

where ``|T Psi_T>`` is the trigger mode seen through the filter.  With the
trigger spectrum ``Psi~`` (time measured from the detection time ``T_d``) the
state is ``Psi~(w) T^*(w) exp(i w T_d) / tau``; ``tau^2`` and ``rho^2`` are the
transmitted and reflected fractions of ``|Psi~|^2``.

The weights follow from a binomial readout of ``n`` amplified excitations,
thermal target-mode occupation ``P_th`` (mean ``n_bar``) and thermal trigger
excitations ``P'_th`` (mean ``n_bar_prime``), each trigger excitation giving
``G`` target excitations:

    w0 = sum_n Pr_K(n) sum_m P_th(n - G m) P'_th(m) rho^(2m)
    wT = sum_n Pr_K(n) sum_{m>=1} m P_th(n - G m) P'_th(m - 1) tau^2 rho^(2(m-1))

with ``Pr_K(n)`` the probability that the readout of ``n`` excitations lands
in the click set ``K``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy import signal as _sig
from scipy import stats as _st
from scipy.interpolate import CubicSpline

from .amplification import thermal_occupation
from .errors import (
    BandGapError,
    CoverageError,
    DegenerateDetectorError,
    GridError,
    InfeasibleError,
    ParameterError,
    PDKError,
    SpecError,
    TruncationError,
)
from .spectral import (
    SpectralFunction,
    TemporalFunction,
    cumulative_integral,
    integrate,
    inverse_fourier,
)

NORM_TOL = 1e-6
UNITARITY_TOL = 1e-8
EIGEN_FLOOR = 1e-12
E_PI = math.e * math.pi


# ---------------------------------------------------------------------------
# readout


def binomial_readout(n, k, eta: float):
    """Probability ``C(n, k) eta^k (1 - eta)^(n - k)`` of reading ``k`` out of ``n``."""
    if not (0.0 <= eta <= 1.0):
        raise ParameterError("efficiency must lie in [0, 1]", eta=eta)
    n_arr = np.asarray(n)
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise ParameterError("readout needs 0 <= k <= n")
    out = _st.binom.pmf(k_arr, n_arr, eta)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ClickSet:
    """Readout values that count as a click: ``k >= k_min`` or an explicit finite set."""

    k_min: int = 1
    values: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.values is not None:
            vals = tuple(sorted({int(v) for v in self.values}))
            if not vals or vals[0] < 1:
                raise SpecError("click values must be integers >= 1", values=list(vals))
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "k_min", vals[0])
        elif int(self.k_min) != self.k_min or self.k_min < 1:
            raise SpecError("click threshold must be an integer >= 1", k_min=self.k_min)
        object.__setattr__(self, "k_min", int(self.k_min))

    @classmethod
    def exactly(cls, *values: int) -> "ClickSet":
        return cls(values=tuple(values))

    def probability(self, n, eta: float) -> np.ndarray:
        """``Pr_K(n)``: probability that the readout of ``n`` excitations is a click."""
        n = np.asarray(n)
        if self.values is None:
            return _st.binom.sf(self.k_min - 1, n, eta)
        return sum(_st.binom.pmf(k, n, eta) for k in self.values)

    def to_dict(self) -> dict:
        return {"values": list(self.values)} if self.values is not None else {"k_min": self.k_min}


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class DetectorSpec:
    """Everything that fixes the click element.

    ``transmission`` and ``trigger`` share a frequency grid.  ``reflection`` is
    optional; without it ``|R|^2 = 1 - |T|^2``.  ``trigger_weight`` is the
    weight of the (possibly subnormalised) trigger amplitude and multiplies
    ``wT``.
    """

    transmission: SpectralFunction
    trigger: SpectralFunction
    eta: float = 1.0
    G: int = 1
    clicks: ClickSet = field(default_factory=ClickSet)
    n_bar: float = 0.0
    n_bar_prime: float = 0.0
    detection_time: float = 0.0
    trigger_weight: float = 1.0
    reflection: Optional[SpectralFunction] = None

    def __post_init__(self) -> None:
        if not (0.0 < self.eta <= 1.0):
            raise SpecError("efficiency must lie in (0, 1]", eta=self.eta)
        if int(self.G) != self.G or self.G < 1:
            raise SpecError("gain must be an integer >= 1", G=self.G)
        object.__setattr__(self, "G", int(self.G))
        if not isinstance(self.clicks, ClickSet):
            object.__setattr__(self, "clicks", ClickSet(**self.clicks))
        if not (self.n_bar >= 0 and self.n_bar_prime >= 0) or not np.isfinite(self.n_bar + self.n_bar_prime):
            raise SpecError("thermal occupations must be finite and non-negative")
        if not (0.0 <= self.trigger_weight <= 1.0):
            raise SpecError("trigger weight must lie in [0, 1]", trigger_weight=self.trigger_weight)
        if not np.isfinite(self.detection_time):
            raise SpecError("detection time must be finite")
        if not self.transmission.grid.same_as(self.trigger.grid):
            raise SpecError("transmission and trigger spectrum must share a grid")
        if np.max(self.transmission.abs2()) > 1.0 + 1e-9:
            raise SpecError("|T| must not exceed one", max_abs_t=float(np.sqrt(self.transmission.abs2().max())))
        nrm = self.trigger.norm2()
        if abs(nrm - 1.0) > NORM_TOL:
            raise SpecError("trigger spectrum must be normalised", norm=float(nrm))
        if self.reflection is not None and not self.reflection.grid.same_as(self.trigger.grid):
            raise SpecError("reflection must share the trigger grid")

    @classmethod
    def from_temperatures(
        cls,
        transmission: SpectralFunction,
        trigger: SpectralFunction,
        *,
        omega_prime: float,
        kT: float,
        kT_prime: float = 0.0,
        omega_trigger: Optional[float] = None,
        hbar: float = 1.0,
        **kw,
    ) -> "DetectorSpec":
        """Occupations from thermal energies.

        ``n_bar`` uses the target-mode frequency ``omega_prime``.  The reflected
        trigger mode is not monochromatic; its occupation uses
        ``omega_trigger`` (the trigger's carrier frequency), which must be
        given when ``kT_prime > 0``.
        """
        n_bar = thermal_occupation(omega_prime, kT, hbar=hbar)
        if kT_prime > 0 and omega_trigger is None:
            raise SpecError("omega_trigger is needed for a non-zero kT_prime")
        n_bar_prime = thermal_occupation(omega_trigger, kT_prime, hbar=hbar) if kT_prime > 0 else 0.0
        return cls(transmission, trigger, n_bar=n_bar, n_bar_prime=n_bar_prime, **kw)


@dataclass(frozen=True)
class ModeOverlap:
    """Transmitted and reflected amplitudes of the trigger mode."""

    tau: float
    rho: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.tau <= 1.0 + 1e-12 and 0.0 <= self.rho <= 1.0 + 1e-12):
            raise ParameterError("overlaps must lie in [0, 1]", tau=self.tau, rho=self.rho)
        if abs(self.tau**2 + self.rho**2 - 1.0) > UNITARITY_TOL:
            raise ParameterError(
                "tau^2 + rho^2 differs from one", tau=self.tau, rho=self.rho, defect=self.tau**2 + self.rho**2 - 1.0
            )


@dataclass(frozen=True)
class POVMElement:
    """``w0 |vac><vac| + wT |state><state|`` with a normalised single-photon ``state``."""

    w0: float
    wT: float
    state: SpectralFunction
    overlap: Optional[ModeOverlap] = None
    n_max: int = 0
    residual: float = 0.0

    def __post_init__(self) -> None:
        for name in ("w0", "wT"):
            v = getattr(self, name)
            if not (-1e-12 <= v <= 1.0 + 1e-12):
                raise ParameterError(f"{name} must lie in [0, 1]", value=v)
            object.__setattr__(self, name, float(min(max(v, 0.0), 1.0)))
        nrm = self.state.norm2()
        if abs(nrm - 1.0) > 1e-8:
            raise ParameterError("element state must be normalised", norm=float(nrm))

    @property
    def trace(self) -> float:
        return self.w0 + self.wT

    @property
    def purity(self) -> float:
        return povm_purity([self.w0, self.wT])

    def to_dict(self) -> dict:
        out = {"w0": self.w0, "wT": self.wT, "n_max": self.n_max, "residual": self.residual}
        if self.overlap is not None:
            out.update(tau=self.overlap.tau, rho=self.overlap.rho)
        return out


@dataclass(frozen=True)
class Distribution:
    """Sampling law of one fluctuating parameter.

    ``kind`` is ``"uniform"`` (``low``, ``high``), ``"normal"`` (``mean``,
    ``std``) or ``"discrete"`` (``values``, optional ``probs``).
    """

    kind: str
    low: float = 0.0
    high: float = 0.0
    mean: float = 0.0
    std: float = 0.0
    values: tuple = ()
    probs: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.kind == "uniform":
            if not self.high >= self.low:
                raise SpecError("uniform law needs high >= low", low=self.low, high=self.high)
        elif self.kind == "normal":
            if not self.std >= 0:
                raise SpecError("normal law needs std >= 0", std=self.std)
        elif self.kind == "discrete":
            vals = tuple(self.values)
            if not vals:
                raise SpecError("discrete law needs values")
            object.__setattr__(self, "values", vals)
            if self.probs is not None:
                p = np.asarray(self.probs, dtype=float)
                if p.shape != (len(vals),) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                    raise SpecError("discrete probabilities must be non-negative and sum to one")
                object.__setattr__(self, "probs", tuple(float(v) for v in p))
        else:
            raise SpecError("unknown distribution", kind=self.kind)

    def support(self) -> tuple[float, float]:
        if self.kind == "uniform":
            return self.low, self.high
        if self.kind == "normal":
            return (self.mean, self.mean) if self.std == 0 else (-math.inf, math.inf)
        return float(min(self.values)), float(max(self.values))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size) if self.high > self.low else np.full(size, self.low)
        if self.kind == "normal":
            return rng.normal(self.mean, self.std, size) if self.std > 0 else np.full(size, self.mean)
        idx = rng.choice(len(self.values), size=size, p=self.probs)
        return np.asarray(self.values)[idx]


_DOMAINS = {
    "eta": (0.0, 1.0, False),
    "n_bar": (0.0, math.inf, True),
    "n_bar_prime": (0.0, math.inf, True),
    "trigger_weight": (0.0, 1.0, True),
    "detection_time": (-math.inf, math.inf, True),
    "G": (1.0, math.inf, True),
}


@dataclass(frozen=True)
class FluctuationSpec:
    """Independent laws for named :class:`DetectorSpec` fields, and a sample count."""

    laws: Mapping[str, Distribution]
    samples: int = 256

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise SpecError("need at least one sample", samples=self.samples)
        laws = {}
        for name, law in dict(self.laws).items():
            if name not in _DOMAINS:
                raise SpecError("parameter cannot fluctuate", parameter=name, allowed=sorted(_DOMAINS))
            if not isinstance(law, Distribution):
                law = Distribution(**law)
            lo, hi = law.support()
            dlo, dhi, closed = _DOMAINS[name]
            low_ok = lo >= dlo if closed else lo > dlo
            if law.kind != "normal" and not (low_ok and hi <= dhi):
                raise SpecError("law support leaves the parameter domain", parameter=name, support=[lo, hi])
            laws[name] = law
        object.__setattr__(self, "laws", laws)


@dataclass(frozen=True)
class UncertaintyReport:
    """Entropic widths ``Delta X = 2^H dX`` in time and frequency."""

    delta_t: float
    delta_omega: float
    bin_t: float
    bin_omega: float
    entropy_t: float
    entropy_omega: float

    @property
    def product(self) -> float:
        return self.delta_t * self.delta_omega

    def to_dict(self) -> dict:
        return {
            "delta_t": self.delta_t,
            "delta_omega": self.delta_omega,
            "product": self.product,
            "bin_t": self.bin_t,
            "bin_omega": self.bin_omega,
            "entropy_t": self.entropy_t,
            "entropy_omega": self.entropy_omega,
        }


# ---------------------------------------------------------------------------
# mode overlap and assembly


def _overlap(a: SpectralFunction, b: SpectralFunction) -> complex:
    """``<a|b>``."""
    return complex(integrate(a.x, np.conj(a.values) * b.values))


def mode_overlap(
    trigger: SpectralFunction,
    transmission: SpectralFunction,
    reflection: Optional[SpectralFunction] = None,
    *,
    detection_time: float = 0.0,
) -> tuple[ModeOverlap, SpectralFunction, Optional[SpectralFunction]]:
    """``tau``, ``rho`` and the normalised transmitted and reflected states.

    The reflected state is ``None`` when ``rho`` vanishes.
    """
    if not transmission.grid.same_as(trigger.grid):
        raise GridError("trigger and transmission must share a grid")
    nrm = trigger.norm2()
    if abs(nrm - 1.0) > NORM_TOL:
        raise ParameterError("trigger spectrum must be normalised", norm=float(nrm))
    w = trigger.x
    psi = np.asarray(trigger.values, dtype=complex) / math.sqrt(nrm)
    p = np.abs(psi) ** 2
    tau2 = float(integrate(w, p * transmission.abs2()))
    if reflection is None:
        rho2 = max(0.0, 1.0 - tau2)
    else:
        rho2 = float(integrate(w, p * reflection.abs2()))
    if tau2 <= 0.0:
        raise DegenerateDetectorError("trigger spectrum is entirely blocked by the filter", tau2=tau2)
    shift = np.exp(1j * w * detection_time)
    tau = math.sqrt(min(tau2, 1.0))
    rho = math.sqrt(min(rho2, 1.0))
    t_state = SpectralFunction(trigger.grid, psi * np.conj(transmission.values) * shift / tau)
    r_state = None
    if rho > 0 and reflection is not None:
        r_state = SpectralFunction(trigger.grid, psi * np.conj(reflection.values) * shift / rho)
    return ModeOverlap(tau, rho), t_state, r_state


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.size
    if n > 8192:
        return np.maximum(_sig.fftconvolve(a, b)[:n], 0.0)
    return np.convolve(a, b)[:n]


def povm_weights(
    *,
    tau: float,
    rho: float,
    eta: float,
    G: int,
    clicks: ClickSet,
    n_bar: float,
    n_bar_prime: float,
    eps: float = 1e-12,
    n_start: int = 64,
    n_cap: int = 1 << 22,
) -> tuple[float, float, int, float]:
    """``(w0, wT, n_max, residual)`` by truncated summation.

    Partial sums over ``n <= n_max`` are compared with the closed-form totals
    of the same sums without the readout factor (``Pr_K <= 1``); the
    difference bounds the neglected tail and ``n_max`` doubles until it is
    below ``eps`` for both weights.
    """
    q = n_bar / (1.0 + n_bar)
    qp = n_bar_prime / (1.0 + n_bar_prime)
    r2, t2 = rho * rho, tau * tau
    x = qp * r2
    total0 = (1.0 - qp) / (1.0 - x)
    totalT = t2 * (1.0 - qp) / (1.0 - x) ** 2
    n = max(int(n_start), 2 * G * clicks.k_min, 8)
    while True:
        N = np.arange(n + 1)
        pth = (1.0 - q) * np.power(q, N)
        m = np.arange(n // G + 1)
        u0 = np.zeros(n + 1)
        uT = np.zeros(n + 1)
        u0[::G] = (1.0 - qp) * np.power(x, m)
        uT[G::G] = m[1:] * t2 * (1.0 - qp) * np.power(x, m[1:] - 1)
        w0n = _convolve(pth, u0)
        wTn = _convolve(pth, uT)
        slack = 64 * np.finfo(float).eps * (n + 1)
        residual = max(total0 - w0n.sum(), totalT - wTn.sum(), 0.0)
        if residual <= eps or residual <= slack * max(total0, totalT) and residual <= 10 * eps:
            break
        if n >= n_cap:
            raise TruncationError(
                "weight sums did not converge", achieved=float(residual), requested=eps, n_max=n
            )
        n = min(2 * n, n_cap)
    click = clicks.probability(N, eta)
    return float(np.dot(click, w0n)), float(np.dot(click, wTn)), int(n), float(residual)


def assemble_povm(spec: DetectorSpec, *, eps: float = 1e-12, n_cap: int = 1 << 22) -> POVMElement:
    """Click element of a detector."""
    ov, state, _ = mode_overlap(
        spec.trigger, spec.transmission, spec.reflection, detection_time=spec.detection_time
    )
    w0, wT, n_max, res = povm_weights(
        tau=ov.tau,
        rho=ov.rho,
        eta=spec.eta,
        G=spec.G,
        clicks=spec.clicks,
        n_bar=spec.n_bar,
        n_bar_prime=spec.n_bar_prime,
        eps=eps,
        n_cap=n_cap,
    )
    return POVMElement(w0, wT * spec.trigger_weight, state.normalized(), ov, n_max, res)


# ---------------------------------------------------------------------------
# Born rule, Bayes, purity


@dataclass(frozen=True)
class InputState:
    """Density operator on ``{vac} + single photon``.

    The single-photon block is the mixture ``sum_i p_i |f_i><f_i|`` of
    normalised spectra; coherences with the vacuum do not affect click
    probabilities and are not stored.
    """

    vacuum: float = 0.0
    photons: tuple[tuple[float, SpectralFunction], ...] = ()

    def __post_init__(self) -> None:
        ps = [float(p) for p, _ in self.photons]
        if self.vacuum < 0 or any(p < 0 for p in ps):
            raise ParameterError("populations must be non-negative")
        tr = self.vacuum + sum(ps)
        if abs(tr - 1.0) > 1e-9:
            raise ParameterError("input state must have unit trace", trace=tr)
        for _, f in self.photons:
            n = f.norm2()
            if abs(n - 1.0) > NORM_TOL:
                raise ParameterError("photon spectra must be normalised", norm=float(n))

    @classmethod
    def vacuum_state(cls) -> "InputState":
        return cls(vacuum=1.0)

    @classmethod
    def pure(cls, f: SpectralFunction) -> "InputState":
        return cls(photons=((1.0, f),))


def _on_grid(f: SpectralFunction, ref: SpectralFunction) -> SpectralFunction:
    return f if f.grid.same_as(ref.grid) else f.resample(ref.grid)


def born_probability(element: POVMElement, rho: InputState) -> float:
    """``Tr[Pi rho] = w0 <vac|rho|vac> + wT <state|rho|state>``."""
    p = element.w0 * rho.vacuum
    for weight, f in rho.photons:
        p += element.wT * weight * abs(_overlap(element.state, _on_grid(f, element.state))) ** 2
    return float(min(max(p, 0.0), 1.0))


def bayes_retrodict(weights, priors) -> np.ndarray:
    """Posterior ``P(i|k) = w_i P(i) / sum_j w_j P(j)``."""
    w = np.asarray(weights, dtype=float)
    p = np.asarray(priors, dtype=float)
    if w.shape != p.shape:
        raise ParameterError("weights and priors must align")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ParameterError("priors must be non-negative and sum to one", total=float(p.sum()))
    if np.any(w < 0):
        raise ParameterError("weights must be non-negative")
    joint = w * p
    pk = joint.sum()
    if pk <= 0:
        raise ParameterError("outcome has zero probability under the prior")
    return joint / pk


def povm_purity(weights, gram=None) -> float:
    """``Tr[Pi^2] / Tr[Pi]^2`` for ``Pi = sum_i w_i |i><i|``.

    ``gram`` holds ``<i|j>``; by default the states are orthonormal.
    """
    w = np.asarray(weights, dtype=float)
    g = np.eye(w.size) if gram is None else np.asarray(gram)
    if g.shape != (w.size, w.size):
        raise ParameterError("Gram matrix must be square and match the weights")
    tr = float(np.real(np.sum(w * np.diag(g))))
    if tr <= 0:
        raise ParameterError("element has zero trace")
    tr2 = float(np.real(w @ (np.abs(g) ** 2) @ w))
    return tr2 / (tr * tr)


# ---------------------------------------------------------------------------
# mode matching


def mode_matched_design(
    target: SpectralFunction,
    transmission: SpectralFunction,
    detection_time: float = 0.0,
    *,
    floor: float = 1e-8,
    support: float = 1e-12,
) -> SpectralFunction:
    """Trigger spectrum that makes the transmitted state equal ``target``.

    ``Psi~ = f~ exp(-i w T_d) / T^*`` on the support of ``f~`` (points where
    ``|f~|^2 > support * max |f~|^2``), zero elsewhere, normalised.  A zero
    of ``T`` inside the support cannot be compensated: it is detected as
    ``|T| < floor`` at a support point or as a phase jump above ``pi/2``
    between neighbouring support points, and reported as a
    :class:`BandGapError` at the minimum of ``|T|`` along the chord.
    """
    if not transmission.grid.same_as(target.grid):
        raise GridError("target and transmission must share a grid")
    f = np.asarray(target.values, dtype=complex)
    t = np.asarray(transmission.values, dtype=complex)
    w = target.x
    a2 = np.abs(f) ** 2
    if a2.max() <= 0:
        raise ParameterError("target spectrum is zero")
    sup = a2 > support * a2.max()
    idx = np.flatnonzero(sup)
    low = idx[np.abs(t[idx]) < floor]
    if low.size:
        k = int(low[np.argmin(np.abs(t[low]))])
        raise BandGapError("transmission vanishes inside the target support", frequency=_zero_near(w, t, k))
    pairs = idx[:-1][np.diff(idx) == 1]
    jumps = np.abs(np.angle(t[pairs + 1] * np.conj(t[pairs])))
    bad = pairs[jumps > 0.5 * np.pi]
    if bad.size:
        k = int(bad[np.argmax(jumps[jumps > 0.5 * np.pi])])
        raise BandGapError(
            "transmission passes through zero inside the target support", frequency=_chord_min(w, t, k)
        )
    psi = np.zeros_like(f)
    psi[sup] = f[sup] * np.exp(-1j * w[sup] * detection_time) / np.conj(t[sup])
    return SpectralFunction(target.grid, psi).normalized()


def _chord_min(w: np.ndarray, t: np.ndarray, k: int) -> float:
    d = t[k + 1] - t[k]
    s = 0.0 if abs(d) == 0 else float(np.clip(-np.real(np.conj(t[k]) * d) / abs(d) ** 2, 0.0, 1.0))
    return float(w[k] + s * (w[k + 1] - w[k]))


def _zero_near(w: np.ndarray, t: np.ndarray, k: int) -> float:
    cands = [w[k]]
    vals = [abs(t[k])]
    for j in (k - 1, k):
        if 0 <= j < w.size - 1:
            x = _chord_min(w, t, j)
            s = (x - w[j]) / (w[j + 1] - w[j])
            cands.append(x)
            vals.append(abs(t[j] + s * (t[j + 1] - t[j])))
    return float(cands[int(np.argmin(vals))])


def matching_fidelity(element: POVMElement, target: SpectralFunction) -> float:
    """``P_T / w_T = |<T Psi_T | f>|^2`` for a normalised target."""
    f = _on_grid(target, element.state).normalized()
    return abs(_overlap(element.state, f)) ** 2


# ---------------------------------------------------------------------------
# entropic uncertainty


def _entropy(x: np.ndarray, density: np.ndarray, delta: float) -> tuple[float, float]:
    """Shannon entropy (bits) of ``density`` binned on multiples of ``delta``, and the covered mass."""
    cum = cumulative_integral(x, density)
    lo = math.floor(x[0] / delta)
    hi = math.ceil(x[-1] / delta)
    edges = np.clip(np.arange(lo, hi + 1) * delta, x[0], x[-1])
    spline = CubicSpline(x, cum)
    p = np.diff(spline(edges))
    p = p[p > 0]
    total = float(p.sum())
    p = p / total
    return float(-np.sum(p * np.log2(p))), total


def _width(x: np.ndarray, density: np.ndarray) -> float:
    m = integrate(x, density)
    mu = integrate(x, x * density) / m
    return math.sqrt(max(float(integrate(x, (x - mu) ** 2 * density) / m), 0.0))


def _time_density(states: Sequence[SpectralFunction], weights: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    dens = None
    t = None
    for st, lam in zip(states, weights):
        tf = inverse_fourier(st, t_start=0.0, leakage_tol=1e-4)
        t = tf.x
        d = lam * tf.abs2()
        dens = d if dens is None else dens + d
    # the transform is periodic: rotate so the quietest sample sits at the edge
    k = int(np.argmin(dens))
    dt = t[1] - t[0]
    dens = np.roll(dens, -k)
    t = t[k] + dt * np.arange(t.size)
    return t, dens


def entropic_uncertainty(
    element, *, time_bin: Optional[float] = None, frequency_bin: Optional[float] = None
) -> UncertaintyReport:
    """Entropic widths of the projected single-photon block.

    ``element`` is a :class:`POVMElement`, a :class:`MixedPOVMElement` or a
    single normalised :class:`SpectralFunction`; mixtures use the
    weight-averaged densities.  The spectra must sit on a uniform grid so the
    time density follows by Fourier transform.  Default bins are a fiftieth
    of the standard deviation.
    """
    states, weights = _single_photon_block(element)
    x = states[0].x
    lam = np.asarray(weights, dtype=float) / float(np.sum(weights))
    dw = sum(l * s.abs2() for l, s in zip(lam, states))
    if not states[0].grid.is_uniform():
        raise GridError("entropic uncertainty needs a uniform frequency grid")
    t, dt_dens = _time_density(states, lam)
    bw = frequency_bin or _width(x, dw) / 50.0
    bt = time_bin or _width(t, dt_dens) / 50.0
    h_w, cov_w = _entropy(x, dw, bw)
    h_t, cov_t = _entropy(t, dt_dens, bt)
    for name, cov in (("frequency", cov_w), ("time", cov_t)):
        if cov < 1.0 - 1e-8:
            raise CoverageError("bins do not cover the probability mass", observable=name, covered=cov)
    return UncertaintyReport(2.0**h_t * bt, 2.0**h_w * bw, bt, bw, h_t, h_w)


def _single_photon_block(element) -> tuple[list[SpectralFunction], list[float]]:
    if isinstance(element, SpectralFunction):
        return [element], [1.0]
    if isinstance(element, POVMElement):
        return [element.state], [1.0]
    if isinstance(element, MixedPOVMElement):
        if not element.states:
            raise ParameterError("mixed element has no single-photon component")
        return list(element.states), list(element.weights)
    raise ParameterError("unsupported element type", type=type(element).__name__)


# ---------------------------------------------------------------------------
# parameter fluctuations


@dataclass(frozen=True)
class MixedPOVMElement:
    """Fluctuation-averaged element ``w0 |vac><vac| + sum_k weights_k |states_k><states_k|``."""

    w0: float
    weights: tuple[float, ...]
    states: tuple[SpectralFunction, ...]
    samples: int
    skipped: tuple[tuple[int, str], ...] = ()
    sample_traces: tuple[float, ...] = ()

    @property
    def wT(self) -> float:
        return float(sum(self.weights))

    @property
    def trace(self) -> float:
        return self.w0 + self.wT

    @property
    def purity(self) -> float:
        return povm_purity([self.w0, *self.weights])

    def to_dict(self) -> dict:
        return {
            "w0": self.w0,
            "wT": self.wT,
            "weights": list(self.weights),
            "purity": self.purity,
            "samples": self.samples,
            "skipped": [{"index": i, "message": m} for i, m in self.skipped],
        }


def _thread_count() -> int:
    env = os.environ.get("PDK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError("PDK_THREADS must be an integer", value=env) from None
    return os.cpu_count() or 1


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    d = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def fluctuate_povm(
    spec: DetectorSpec,
    fluct: FluctuationSpec,
    *,
    seed=None,
    strict: bool = False,
    threads: Optional[int] = None,
    eps: float = 1e-12,
) -> MixedPOVMElement:
    """Monte-Carlo average of the click element over parameter fluctuations.

    Parameter draws happen up front from one seeded generator; samples are
    evaluated in a thread pool and reduced in draw order, so the result is
    independent of the thread count.  Invalid samples are skipped and
    reported, or raise with ``strict=True``.  The single-photon block is
    diagonalised through the Gram matrix of the sampled states.
    """
    rng = np.random.default_rng(seed)
    n = fluct.samples
    draws = {name: law.sample(rng, n) for name, law in fluct.laws.items()}

    def one(i: int):
        kw = {}
        for name, vals in draws.items():
            v = vals[i].item()
            if name == "G":
                if v != int(v):
                    raise SpecError("sampled gain is not an integer", G=v)
                v = int(v)
            kw[name] = v
        return assemble_povm(replace(spec, **kw), eps=eps)

    def guarded(i: int):
        try:
            return one(i)
        except PDKError as exc:
            if strict:
                raise
            return exc

    workers = max(1, min(threads or _thread_count(), n))
    if workers == 1:
        results = [guarded(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, range(n)))
    good = [(i, r) for i, r in enumerate(results) if isinstance(r, POVMElement)]
    skipped = tuple((i, str(r.message)) for i, r in enumerate(results) if not isinstance(r, POVMElement))
    if not good:
        raise InfeasibleError("no valid fluctuation sample", skipped=len(skipped))
    s = len(good)
    w0 = float(sum(r.w0 for _, r in good)) / s
    wts = np.array([r.wT for _, r in good]) / s
    ref = good[0][1].state
    x = ref.x
    q = np.sqrt(_trapezoid_weights(x))
    phi = np.stack([np.asarray(r.state.values, dtype=complex) * q for _, r in good], axis=1)
    phi /= np.linalg.norm(phi, axis=0)
    gram = phi.conj().T @ phi
    sq = np.sqrt(wts)
    lam, vec = np.linalg.eigh(sq[:, None] * gram * sq[None, :])
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    keep = lam > EIGEN_FLOOR
    states = []
    for k in np.flatnonzero(keep):
        v = phi @ (sq * vec[:, k]) / math.sqrt(lam[k])
        st = SpectralFunction(ref.grid, v / q if np.all(q > 0) else _safe_div(v, q)).normalized()
        c = _overlap(ref, st)
        if abs(c) > 0:
            st = st.scaled(abs(c) / c)
        states.append(st)
    return MixedPOVMElement(
        w0,
        tuple(float(v) for v in lam[keep]),
        tuple(states),
        s,
        skipped,
        tuple(r.w0 + r.wT for _, r in good),
    )


def _safe_div(v: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    nz = q > 0
    out[nz] = v[nz] / q[nz]
    return out


# ---------------------------------------------------------------------------
# super-resolution


@dataclass(frozen=True)
class SuperResolutionResult:
    estimate: float
    stderr: float
    n1: int
    n2: int
    trials: int
    p1: float
    p2: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n1": self.n1,
            "n2": self.n2,
            "trials": self.trials,
            "p1": self.p1,
            "p2": self.p2,
        }


def super_resolution_probabilities(
    epsilon: float, eta: float, phi1: Optional[SpectralFunction] = None, phi2: Optional[SpectralFunction] = None
) -> tuple[float, float]:
    """Click probabilities of the detectors ``eta |phi_1><phi_1|`` and ``eta |phi_2><phi_2|``.

    The input is the equal mixture of ``(phi_1 +- sqrt(eps) phi_2) / sqrt(1 + eps)``.
    With orthonormal ``phi1``, ``phi2`` the Born rule is evaluated by
    quadrature; without them the closed forms ``eta / (1 + eps)`` and
    ``eta eps / (1 + eps)`` are returned.
    """
    if not epsilon >= 0:
        raise ParameterError("epsilon must be non-negative", epsilon=epsilon)
    if not (0.0 < eta <= 1.0):
        raise ParameterError("efficiency must lie in (0, 1]", eta=eta)
    if phi1 is None or phi2 is None:
        return eta / (1.0 + epsilon), eta * epsilon / (1.0 + epsilon)
    phi2 = _on_grid(phi2, phi1)
    norm = 1.0 / math.sqrt(1.0 + epsilon)
    sources = [
        SpectralFunction(phi1.grid, (phi1.values + s * math.sqrt(epsilon) * phi2.values) * norm) for s in (1, -1)
    ]
    rho = InputState(photons=tuple((0.5, f) for f in sources))
    probs = []
    for phi in (phi1, phi2):
        el = POVMElement(0.0, eta, phi)
        probs.append(born_probability(el, rho))
    return probs[0], probs[1]


def super_resolution_estimate(
    epsilon: float, eta: float, trials: int, *, seed=None, probabilities: Optional[tuple[float, float]] = None
) -> SuperResolutionResult:
    """Estimate ``epsilon`` from simulated click counts as ``N2 / N1``.

    Each trial yields a click on detector 1, on detector 2, or none
    (multinomial).  The standard error is the delta-method value for a ratio
    of multinomial counts.
    """
    if trials < 10_000:
        raise ParameterError("need at least 10^4 trials", trials=trials)
    p1, p2 = probabilities or super_resolution_probabilities(epsilon, eta)
    rng = np.random.default_rng(seed)
    n1, n2, _ = rng.multinomial(trials, [p1, p2, max(0.0, 1.0 - p1 - p2)])
    if n1 == 0:
        raise InfeasibleError("no clicks on the first detector", trials=trials)
    est = n2 / n1
    if n2 == 0:
        se = 1.0 / n1
    else:
        f1, f2 = n1 / trials, n2 / trials
        se = est * math.sqrt((1.0 - f1) / n1 + (1.0 - f2) / n2 + 2.0 / trials)
    return SuperResolutionResult(float(est), float(se), int(n1), int(n2), int(trials), float(p1), float(p2))


# ---------------------------------------------------------------------------
# toy element from a monitored output continuum


@dataclass(frozen=True)
class ToyPOVM:
    """Click element of a monitored output continuum integrated over a window.

    ``<w|Pi|w'> = T^*(w) T(w') K(w - w') / (2 pi)`` with
    ``K(d) = int_{t0}^{t0 + tau} exp(i d t) dt``; for ``tau = inf`` this is
    ``|T(w)|^2 delta(w - w')``.
    """

    transmission: SpectralFunction
    tau: float
    t0: float

    @property
    def long_time(self) -> bool:
        return math.isinf(self.tau)

    def diagonal(self) -> np.ndarray:
        """Long-time weight function ``|T(w)|^2``."""
        return self.transmission.abs2()

    def kernel(self) -> np.ndarray:
        """Matrix ``<w_i|Pi|w_j>`` on the grid (finite windows only)."""
        if self.long_time:
            raise ParameterError("the long-time element is diagonal; use diagonal()")
        w = self.transmission.x
        d = w[:, None] - w[None, :]
        k = np.where(
            d == 0,
            self.tau,
            (np.exp(1j * d * (self.t0 + self.tau)) - np.exp(1j * d * self.t0)) / (1j * np.where(d == 0, 1, d)),
        )
        t = self.transmission.values
        return np.conj(t)[:, None] * t[None, :] * k / (2.0 * np.pi)

    def probability(self, f: SpectralFunction, *, time_points: int = 4001) -> float:
        """Click probability of a normalised single-photon spectrum."""
        f = _on_grid(f, self.transmission)
        n = f.norm2()
        if abs(n - 1.0) > NORM_TOL:
            raise ParameterError("input spectrum must be normalised", norm=float(n))
        w = f.x
        g = np.asarray(self.transmission.values) * np.asarray(f.values)
        if self.long_time:
            return float(min(1.0, integrate(w, np.abs(g) ** 2)))
        ts = np.linspace(self.t0, self.t0 + self.tau, int(time_points))
        amp = np.array([integrate(w, g * np.exp(-1j * w * tt)) for tt in ts]) / math.sqrt(2.0 * np.pi)
        return float(min(1.0, integrate(ts, np.abs(amp) ** 2)))


def toy_povm(transmission: SpectralFunction, tau: float, *, t0: Optional[float] = None) -> ToyPOVM:
    """Monitored-continuum element for the window ``[t0, t0 + tau]`` (default ending at 0)."""
    if not tau > 0:
        raise ParameterError("integration window must be positive", tau=tau)
    if t0 is None:
        t0 = -tau if np.isfinite(tau) else 0.0
    return ToyPOVM(transmission, float(tau), float(t0))
