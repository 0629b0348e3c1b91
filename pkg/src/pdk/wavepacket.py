"""Time-dependent two-level trigger: retrodictive amplitudes and inverse design.

A two-level system with decay ``kappa(t)`` and detuning ``Delta(t)``, switched
on at ``T0`` and checked at ``T``, clicks with amplitude ``C = int Psi^*(t) f(t) dt``
for an input photon ``f``.  The retrodictive amplitude is

    Psi^*(t) = sqrt(kappa(t)) exp(-int_t^T (i Delta + kappa / 2) dt'),

with norm ``W = 1 - exp(-int_{T0}^T kappa)``.  Conversely any smooth target
``Psi^* = A exp(i phi)`` (``int A^2 = 1``) is produced by

    kappa(t) = A(t)^2 / (1 - int_t^T A^2),      Delta(t) = d phi / dt.

Targets carry the probability mass that lies outside their time grid
(``mass_before``, ``mass_after``) so that the denominator stays accurate
deep in the leading tail, where it is tiny.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import GridError, InfeasibleWindowError, ParameterError
from .spectral import (
    SpectralFunction,
    TemporalFunction,
    TimeGrid,
    cumulative_integral,
    derivative,
    fourier_pair,
    integrate,
)

DENOMINATOR_FLOOR = 1e-12
NORM_TOL = 1e-6


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class TargetWavepacket:
    """Target retrodictive amplitude ``Psi^*(t) = A(t) exp(i phi(t))``.

    ``A`` is non-negative and normalised together with the masses outside the
    grid: ``mass_before + int A^2 + mass_after = 1``.
    """

    amplitude: TemporalFunction
    phase: TemporalFunction
    mass_before: float = 0.0
    mass_after: float = 0.0

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitude.values)
        if np.iscomplexobj(a) or np.iscomplexobj(self.phase.values):
            raise ParameterError("amplitude and phase must be real")
        if np.any(a < 0):
            raise ParameterError("amplitude must be non-negative")
        if not self.amplitude.grid.same_as(self.phase.grid):
            raise GridError("amplitude and phase must share a grid")
        if self.mass_before < 0 or self.mass_after < 0:
            raise ParameterError("masses outside the grid must be non-negative")
        total = self.mass_before + self.mass_after + integrate(self.grid.points, a * a)
        if abs(total - 1.0) > NORM_TOL:
            raise ParameterError("target must be normalised", norm=float(total))

    @property
    def grid(self) -> TimeGrid:
        return self.amplitude.grid

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    def psi_star(self) -> TemporalFunction:
        return TemporalFunction(self.grid, self.amplitude.values * np.exp(1j * self.phase.values))

    def matched_state(self) -> TemporalFunction:
        """Input photon ``f = A exp(-i phi)`` that the target detects best."""
        return TemporalFunction(self.grid, self.amplitude.values * np.exp(-1j * self.phase.values))

    @classmethod
    def from_samples(cls, t, amplitude, phase, *, normalize: bool = True) -> "TargetWavepacket":
        grid = TimeGrid(np.asarray(t, dtype=float))
        a = np.asarray(amplitude, dtype=float)
        if normalize:
            n = integrate(grid.points, a * a)
            if n <= 0:
                raise ParameterError("target amplitude vanishes")
            a = a / np.sqrt(n)
        return cls(TemporalFunction(grid, a), TemporalFunction(grid, np.asarray(phase, dtype=float)))


@dataclass(frozen=True)
class CouplingSchedule:
    """Decay rate and detuning on the detector window ``[t_start, t_detect]``.

    The time grid of ``kappa`` and ``delta`` spans exactly that window.
    """

    kappa: TemporalFunction
    delta: TemporalFunction
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        k = np.asarray(self.kappa.values)
        if np.iscomplexobj(k) or np.any(k < 0):
            raise ParameterError("decay rate must be real and non-negative")
        if np.iscomplexobj(self.delta.values):
            raise ParameterError("detuning must be real")
        if not self.kappa.grid.same_as(self.delta.grid):
            raise GridError("decay and detuning must share a grid")

    @property
    def grid(self) -> TimeGrid:
        return self.kappa.grid

    @property
    def t_start(self) -> float:
        return float(self.grid.points[0])

    @property
    def t_detect(self) -> float:
        return float(self.grid.points[-1])

    @classmethod
    def from_samples(cls, t, kappa, delta) -> "CouplingSchedule":
        grid = TimeGrid(np.asarray(t, dtype=float))
        d = np.broadcast_to(np.asarray(delta, dtype=float), grid.points.shape)
        return cls(TemporalFunction(grid, np.asarray(kappa, dtype=float)), TemporalFunction(grid, d))


@dataclass(frozen=True)
class RetrodictiveAmplitude:
    """``psi`` holds ``Psi(t)``; its conjugate is the detection kernel."""

    psi: TemporalFunction
    weight: float
    norm_defect: float = 0.0

    @property
    def grid(self) -> TimeGrid:
        return self.psi.grid

    def psi_star(self) -> TemporalFunction:
        return self.psi.conj()

    def state(self) -> TemporalFunction:
        """Normalised projected single-photon state ``Psi / sqrt(W)``."""
        if self.weight <= 0:
            raise ParameterError("zero-weight amplitude has no normalised state")
        return self.psi.scaled(1.0 / np.sqrt(self.weight))


# ---------------------------------------------------------------------------
# forward and inverse maps


def forward_amplitude(sched: CouplingSchedule) -> RetrodictiveAmplitude:
    """Retrodictive amplitude and weight of a coupling schedule."""
    t = sched.grid.points
    k = np.asarray(sched.kappa.values, dtype=float)
    big_k = cumulative_integral(t, k, reverse=True)
    phi = cumulative_integral(t, np.asarray(sched.delta.values, dtype=float), reverse=True)
    psi_star = np.sqrt(k) * np.exp(-0.5 * big_k - 1j * phi)
    weight = float(-np.expm1(-big_k[0]))
    psi = TemporalFunction(sched.grid, np.conj(psi_star))
    defect = abs(float(integrate(t, np.abs(psi_star) ** 2)) - weight)
    return RetrodictiveAmplitude(psi, weight, defect)


def inverse_design(
    target: TargetWavepacket, T: float, *, min_weight: float = 1e-12
) -> CouplingSchedule:
    """Coupling schedule whose retrodictive amplitude is ``target`` on ``[t_0, T]``.

    ``T`` must be a point of the target grid; the schedule starts at the
    first grid point.  Mass of the target after ``T`` is lost to the detector
    and lowers the weight.
    """
    t = target.t
    idx = int(np.argmin(np.abs(t - T)))
    scale = max(1.0, abs(T))
    if abs(t[idx] - T) > 1e-9 * scale * max(1.0, float(np.max(np.diff(t)))):
        if T < t[0]:
            raise InfeasibleWindowError("target extends past T", T=T, grid=(float(t[0]), float(t[-1])))
        if T > t[-1]:
            raise InfeasibleWindowError(
                "detection time lies outside the target grid", T=T, grid=(float(t[0]), float(t[-1]))
            )
        raise GridError("detection time must be a grid point", T=T, nearest=float(t[idx]))
    if idx < 2:
        raise InfeasibleWindowError("target extends past T", T=T)
    a = np.asarray(target.amplitude.values, dtype=float)
    a2 = a * a
    after = target.mass_after + float(integrate(t[idx:], a2[idx:])) if idx < t.size - 1 else target.mass_after
    tw = t[: idx + 1]
    inside = cumulative_integral(tw, a2[: idx + 1])
    weight = inside[-1] + target.mass_before
    if weight <= min_weight:
        raise InfeasibleWindowError("target extends past T", T=T, weight=float(weight))
    denom = target.mass_before + inside + after
    notes = []
    if np.any(denom < -1e-12):
        raise InfeasibleWindowError(
            "denominator of the decay rate turns negative", minimum=float(denom.min())
        )
    low = denom < DENOMINATOR_FLOOR
    if np.any(low & (a2[: idx + 1] > 0)):
        msg = f"decay rate capped at {int(low.sum())} points where the denominator fell below {DENOMINATOR_FLOOR:g}"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    denom = np.maximum(denom, DENOMINATOR_FLOOR)
    kappa = a2[: idx + 1] / denom
    delta = derivative(tw, np.asarray(target.phase.values, dtype=float)[: idx + 1])
    grid = TimeGrid(tw)
    return CouplingSchedule(TemporalFunction(grid, kappa), TemporalFunction(grid, delta), tuple(notes))


def round_trip_error(target: TargetWavepacket, sched: CouplingSchedule) -> float:
    """L2 distance between the target and the forward amplitude on the window.

    The global phase is fixed at the amplitude maximum.
    """
    amp = forward_amplitude(sched)
    n = len(sched.grid)
    want = target.psi_star().values[:n]
    got = amp.psi_star().values
    k = int(np.argmax(np.abs(want)))
    if abs(got[k]) > 0:
        got = got * (want[k] / got[k]) / abs(want[k] / got[k])
    return float(np.sqrt(integrate(sched.grid.points, np.abs(got - want) ** 2)))


def detection_probability(
    f: TemporalFunction, amp: RetrodictiveAmplitude, *, on_mismatch: str = "resample"
) -> float:
    """Click probability ``|int Psi^* f dt|^2`` for a normalised input ``f``.

    ``f`` may live on a wider grid; when the amplitude grid is a slice of it
    the slice is used directly, otherwise ``f`` is linearly resampled (or a
    :class:`GridError` raised with ``on_mismatch="raise"``).
    """
    n = f.norm2()
    if abs(n - 1.0) > NORM_TOL:
        raise ParameterError("input state must be normalised", norm=float(n))
    vals = _restrict(f, amp.grid, on_mismatch)
    c = integrate(amp.grid.points, np.conj(amp.psi.values) * vals)
    return float(min(1.0, abs(c) ** 2))


def _restrict(f: TemporalFunction, grid: TimeGrid, on_mismatch: str) -> np.ndarray:
    x = f.grid.points
    t = grid.points
    i0 = int(np.searchsorted(x, t[0] - 1e-12 * max(1.0, abs(t[0]))))
    if i0 + t.size <= x.size:
        part = x[i0 : i0 + t.size]
        if np.allclose(part, t, rtol=0, atol=1e-9 * max(1.0, float(np.max(np.abs(t))))):
            return np.asarray(f.values)[i0 : i0 + t.size]
    if on_mismatch == "raise":
        raise GridError("input state and amplitude live on different grids")
    return f.resample(grid).values


def trigger_spectrum(amp: RetrodictiveAmplitude, *, pad: int = 4, center: float = 0.0) -> SpectralFunction:
    """Spectrum of the normalised projected state, with time measured from detection.

    The amplitude vanishes outside the detector window, so the window is zero
    padded (``pad`` times its length) before the transform.
    """
    st = amp.state()
    t = st.grid.points
    if not st.grid.is_uniform():
        raise GridError("the trigger spectrum needs a uniform time grid")
    dt = st.grid.step
    n = t.size
    extra = pad * n
    full = np.concatenate([np.zeros(extra), st.values, np.zeros(extra)])
    tt = t[0] - t[-1] + (np.arange(full.size) - extra) * dt
    return fourier_pair(TemporalFunction(TimeGrid(tt), full), center=center)


# ---------------------------------------------------------------------------
# target families


def gaussian_target(
    sigma: float,
    t0: float = 0.0,
    omega0: float = 0.0,
    *,
    n_sigma: float = 8.0,
    points_per_sigma: int = 256,
) -> TargetWavepacket:
    """Minimum-uncertainty target: ``|A|^2`` is a normal law of standard deviation ``sigma``.

    The phase is ``omega0 (t - t0)``, so the matching detuning is the constant
    ``omega0``.  The grid spans ``t0 +- n_sigma sigma`` with ``points_per_sigma``
    steps per ``sigma`` and the masses beyond it are added analytically.
    """
    if sigma <= 0:
        raise ParameterError("sigma must be positive", sigma=sigma)
    m = int(round(n_sigma * points_per_sigma))
    t = t0 + sigma * np.arange(-m, m + 1) / points_per_sigma
    a = np.exp(-((t - t0) ** 2) / (4 * sigma**2)) / (2 * np.pi * sigma**2) ** 0.25
    tail = float(ndtr(-(t[-1] - t0) / sigma))
    grid = TimeGrid(t)
    return TargetWavepacket(
        TemporalFunction(grid, a), TemporalFunction(grid, omega0 * (t - t0)), tail, tail
    )


def gaussian_kappa(t, sigma: float, t0: float, T: float) -> np.ndarray:
    """Closed-form decay rate for the Gaussian target with the detector open since ``-inf``."""
    t = np.asarray(t, dtype=float)
    num = np.exp(-((t - t0) ** 2) / (2 * sigma**2)) / np.sqrt(2 * np.pi * sigma**2)
    return num / (ndtr((t - t0) / sigma) + ndtr((t0 - T) / sigma))


def gaussian_weight(sigma: float, t0: float, T: float, T0: float = -np.inf) -> float:
    return float(ndtr((T - t0) / sigma) - ndtr((T0 - t0) / sigma))


def build_orthogonal_pulse(
    sigma: float,
    z: float,
    s: float,
    *,
    t0: float = 0.0,
    omega0: float = 0.0,
    order: int = 1,
    n_sigma: float = 8.0,
    points_per_sigma: int = 256,
) -> TargetWavepacket:
    """Smoothed first-order Hermite-Gaussian, exactly orthogonal to the Gaussian target.

    The amplitude is ``u exp(-u^2 / 4 sigma^2)`` with ``u = |t - t0| - z`` (zero
    for ``u <= 0``).  The phase ramps linearly from 0 to pi over
    ``|t - t0| <= z - s`` (a step when ``z == s``).  Both are convolved with a
    triangle of full width ``s``.  The phase therefore changes only where the
    amplitude vanishes, and the pulse is odd about ``t0``.
    """
    if order != 1:
        raise ParameterError("only first-order pulses are implemented", order=order)
    if not (s > 0 and z >= s):
        raise ParameterError("need z >= s > 0", z=z, s=s)
    m = int(round(n_sigma * points_per_sigma))
    dt = sigma / points_per_sigma
    x = dt * np.arange(-m, m + 1)
    u = np.abs(x) - z
    raw = np.where(u > 0, u * np.exp(-(u**2) / (4 * sigma**2)), 0.0)
    half = z - s
    if half > 0:
        ramp = np.clip(0.5 * np.pi * (1.0 + x / half), 0.0, np.pi)
    else:
        ramp = np.where(x > 0, np.pi, np.where(x < 0, 0.0, 0.5 * np.pi))
    k = max(1, int(round(0.5 * s / dt)))
    kern = (k + 1.0 - np.abs(np.arange(-k, k + 1))).astype(float)
    kern /= kern.sum()
    amp = np.convolve(raw, kern, mode="same")
    ph = np.convolve(np.pad(ramp, k, mode="edge"), kern, mode="valid")
    # tail mass beyond the grid, from int_a^inf u^2 exp(-u^2 / 2 sigma^2) du
    a_end = x[-1] - z
    tail = sigma**2 * a_end * np.exp(-(a_end**2) / (2 * sigma**2)) + sigma**3 * np.sqrt(
        2 * np.pi
    ) * ndtr(-a_end / sigma)
    inside = float(integrate(x, amp * amp))
    norm = inside + 2 * tail
    t = t0 + x
    grid = TimeGrid(t)
    return TargetWavepacket(
        TemporalFunction(grid, amp / np.sqrt(norm)),
        TemporalFunction(grid, ph + omega0 * x),
        float(tail / norm),
        float(tail / norm),
    )


def hermite_gaussian_1(t, sigma: float, t0: float = 0.0) -> np.ndarray:
    """Exact first-order Hermite-Gaussian amplitude (signed), normalised."""
    x = np.asarray(t, dtype=float) - t0
    return x * np.exp(-(x**2) / (4 * sigma**2)) / (sigma**1.5 * (2 * np.pi) ** 0.25)


def polynomial_schedule(
    t, kappa0: float, sigma: float, n: int, *, two_sided: bool = False, delta: float = 0.0
) -> CouplingSchedule:
    """Polynomial decay families, checked at ``T = t[-1]`` and switched on at ``t[0]``.

    One-sided: ``kappa0 ((T - t)/sigma)^n``.  Two-sided:
    ``kappa0 ((t - T0)/sigma)^n ((T - t)/sigma)^n``.
    """
    t = np.asarray(t, dtype=float)
    T, T0 = t[-1], t[0]
    k = kappa0 * ((T - t) / sigma) ** n
    if two_sided:
        k = k * ((t - T0) / sigma) ** n
    return CouplingSchedule.from_samples(t, k, delta)
