"""Grids, sampled complex functions, transforms and filter figures of merit.

Conventions used throughout the package:

* Frequencies are angular (rad per time unit); the time unit is user chosen.
* Fourier transform: ``F(w) = (2 pi)^{-1/2} * integral f(t) exp(+i w t) dt``.  A
  pulse delayed by ``tau`` therefore picks up the factor ``exp(+i w tau)``.
* Group delay is ``+d arg T / d w`` so that it is positive for a causal filter
  under the transform above.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate as _spi

from .errors import CoverageError, GridError, WindowLeakageError

SQRT_2PI = np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class _Grid:
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise GridError("a grid needs at least two points", size=int(pts.size))
        if not np.all(np.isfinite(pts)):
            raise GridError("grid points must be finite")
        if not np.all(np.diff(pts) > 0):
            raise GridError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @classmethod
    def uniform(cls, start: float, stop: float, n: int):
        return cls(np.linspace(start, stop, int(n)))

    @property
    def step(self) -> float:
        """Spacing of a uniform grid (raises for non-uniform grids)."""
        if not self.is_uniform():
            raise GridError("grid is not uniform")
        return float(self.points[1] - self.points[0])

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        d = np.diff(self.points)
        return bool(np.all(np.abs(d - d.mean()) <= rtol * np.abs(d.mean())))

    def same_as(self, other: "_Grid", rtol: float = 1e-12) -> bool:
        if len(self) != len(other):
            return False
        scale = max(1.0, float(np.max(np.abs(self.points))))
        return bool(np.all(np.abs(self.points - other.points) <= rtol * scale))


@dataclass(frozen=True)
class FrequencyGrid(_Grid):
    """Strictly increasing angular frequencies."""

    @classmethod
    def resonance_adapted(
        cls,
        centers,
        widths,
        n: int,
        *,
        tail: float = 1e-9,
        background: float = 0.2,
        pad: float = 2.0,
    ) -> "FrequencyGrid":
        """Grid whose density follows a mixture of Lorentzians.

        Points are quantiles of a mixture of Cauchy laws centred at ``centers``
        with half-widths ``widths``, plus a smooth flat-top component of weight
        ``background`` spanning the centres (padded by ``pad`` times the largest
        width) so that gaps between distant lines are sampled too.

        The quantile levels are ``u = expit(z(s))`` for uniform ``s`` in
        ``[-1, 1]`` with ``z`` a smooth odd polynomial reaching
        ``logit(1 - tail)``.  Half of the points sit in the bulk of the
        mixture and the rest step geometrically through the tails, out to
        roughly ``width / tail``.  The map is smooth, so trapezoid sums on the
        grid converge like those on a uniform grid.
        """
        c = np.atleast_1d(np.asarray(centers, dtype=float))
        w = np.atleast_1d(np.asarray(widths, dtype=float))
        if c.shape != w.shape or c.size == 0:
            raise GridError("centers and widths must be non-empty and aligned")
        if not (0.0 < tail < 0.5):
            raise GridError("tail quantile must lie in (0, 1/2)")
        if np.any(w <= 0):
            raise GridError("widths must be positive")
        if not (0.0 <= background < 1.0):
            raise GridError("background weight must lie in [0, 1)")
        lo_b = c.min() - pad * w.max()
        hi_b = c.max() + pad * w.max()
        edge = 0.5 * pad * w.max()
        span = hi_b - lo_b
        wt = (1.0 - background) / c.size

        def lower(y):
            # 1/2 + arctan(y)/pi without cancellation for y << 0
            with np.errstate(divide="ignore"):
                return np.where(y < 0, -np.arctan(1.0 / np.minimum(y, -1e-300)) / np.pi, 0.5 + np.arctan(y) / np.pi)

        def cdf(x):
            lor = np.sum(wt * lower((x[:, None] - c) / w), axis=1)
            box = edge * (np.logaddexp(0.0, (x - lo_b) / edge) - np.logaddexp(0.0, (x - hi_b) / edge))
            return lor + background * box / span

        def sf(x):
            lor = np.sum(wt * lower((c - x[:, None]) / w), axis=1)
            box = edge * (np.logaddexp(0.0, (hi_b - x) / edge) - np.logaddexp(0.0, (lo_b - x) / edge))
            return lor + background * box / span

        big = np.log((1.0 - tail) / tail)
        lin = min(6.0, 0.5 * big)
        s = np.linspace(-1.0, 1.0, int(n))
        z = lin * s + (big - lin) * s**7
        # levels in the upper half are matched through the survival function
        upper = z > 0
        level = _expit(np.where(upper, -z, z))
        reach = w.max() / (np.pi * tail * max(wt, 1e-300)) + span
        lo = np.full_like(level, c.min() - reach)
        hi = np.full_like(level, c.max() + reach)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = np.where(upper, sf(mid) > level, cdf(mid) < level)
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
                break
        pts = np.unique(0.5 * (lo + hi))
        return cls(pts)


def _expit(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class TimeGrid(_Grid):
    """Strictly increasing times."""


# ---------------------------------------------------------------------------
# sampled functions


@dataclass(frozen=True)
class _Sampled:
    grid: _Grid
    values: np.ndarray
    defined: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.shape != (len(self.grid),):
            raise GridError(
                "values must match the grid length",
                values=list(vals.shape),
                grid=len(self.grid),
            )
        mask = None
        if self.defined is not None:
            mask = np.asarray(self.defined, dtype=bool)
            if mask.shape != vals.shape:
                raise GridError("definedness mask must match the grid length")
            mask.setflags(write=False)
        check = vals if mask is None else vals[mask]
        if not np.all(np.isfinite(check)):
            raise GridError("sampled values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "defined", mask)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def abs2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm2(self) -> float:
        """Integral of ``|f|^2`` over the grid."""
        return integrate(self.x, self.abs2())

    def _like(self, values, defined=None):
        return type(self)(self.grid, values, defined)

    def conj(self):
        return self._like(np.conj(self.values), self.defined)

    def scaled(self, factor: complex):
        return self._like(self.values * factor, self.defined)

    def normalized(self):
        n = self.norm2()
        if n <= 0:
            raise GridError("cannot normalize a function with zero norm")
        return self.scaled(1.0 / np.sqrt(n))

    def __mul__(self, other):
        if isinstance(other, _Sampled):
            if not self.grid.same_as(other.grid):
                raise GridError("functions live on different grids")
            return self._like(self.values * other.values)
        return self.scaled(other)

    __rmul__ = __mul__

    def resample(self, grid: _Grid):
        """Linear interpolation onto ``grid``; zero outside the original support."""
        re = np.interp(grid.points, self.x, np.real(self.values), left=0.0, right=0.0)
        if np.iscomplexobj(self.values):
            im = np.interp(grid.points, self.x, np.imag(self.values), left=0.0, right=0.0)
            return type(self)(grid, re + 1j * im)
        return type(self)(grid, re)


@dataclass(frozen=True)
class SpectralFunction(_Sampled):
    """Complex amplitude sampled on a :class:`FrequencyGrid`.

    ``defined`` optionally flags points where the value is meaningful (used by
    the group delay, which is undefined where the transmission vanishes).
    """

    def __post_init__(self) -> None:
        if not isinstance(self.grid, FrequencyGrid):
            pts = self.grid.points if isinstance(self.grid, _Grid) else self.grid
            object.__setattr__(self, "grid", FrequencyGrid(np.asarray(pts, dtype=float)))
        super().__post_init__()


@dataclass(frozen=True)
class TemporalFunction(_Sampled):
    """Complex or real amplitude sampled on a :class:`TimeGrid`."""

    def __post_init__(self) -> None:
        if not isinstance(self.grid, TimeGrid):
            pts = self.grid.points if isinstance(self.grid, _Grid) else self.grid
            object.__setattr__(self, "grid", TimeGrid(np.asarray(pts, dtype=float)))
        super().__post_init__()


# ---------------------------------------------------------------------------
# quadrature


def integrate(x, y) -> float | complex:
    """Composite trapezoid with one Richardson step.

    The coarse estimate uses every other point and the two are combined as
    ``(4 I_h - I_2h) / 3``, which removes the leading ``h^2`` error term on any
    grid that is a smooth map of a uniform one.  With an even number of points
    the last interval is integrated separately through a quadratic.  Uniform
    grids use the sixth-order rule of :func:`cumulative_integral` instead.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.size >= 6 and _is_uniform(x):
        return cumulative_integral(x, y)[-1]
    if x.size < 5:
        return _spi.trapezoid(y, x)
    if x.size % 2 == 0:
        return integrate(x[:-1], y[:-1]) + _last_interval(x[-3:], y[-3:])
    fine = _spi.trapezoid(y, x)
    coarse = _spi.trapezoid(y[::2], x[::2])
    return (4.0 * fine - coarse) / 3.0


def _last_interval(x, y):
    """Integral over ``[x1, x2]`` of the parabola through three points."""
    x0, x1, x2 = x

    def basis(xa, xb, xc):
        prim = lambda t: t**3 / 3 - (xb + xc) * t**2 / 2 + xb * xc * t  # noqa: E731
        return (prim(x2) - prim(x1)) / ((xa - xb) * (xa - xc))

    return y[0] * basis(x0, x1, x2) + y[1] * basis(x1, x0, x2) + y[2] * basis(x2, x0, x1)


def integrate_abs(x, y) -> float:
    """``int |y| dx`` for a smooth real ``y`` that may change sign.

    Runs of constant sign are integrated with :func:`integrate`; an interval
    containing a sign change is integrated under a linear model.  This keeps
    the kinks of ``|y|`` from spoiling the extrapolation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.sign(y)
    total = 0.0
    start = 0
    sign = 0.0
    for k in range(x.size - 1):
        if sign == 0.0:
            sign = s[k]
        nxt = s[k + 1]
        if nxt == 0.0 or sign == 0.0 or nxt == sign:
            continue
        if s[k] == 0.0:
            total += abs(integrate(x[start : k + 1], y[start : k + 1])) if k > start else 0.0
            start = k
        else:
            total += abs(integrate(x[start : k + 1], y[start : k + 1])) if k > start else 0.0
            a, b = abs(y[k]), abs(y[k + 1])
            total += (x[k + 1] - x[k]) * (a * a + b * b) / (2.0 * (a + b))
            start = k + 1
        sign = nxt
    if x.size - 1 > start:
        total += abs(integrate(x[start:], y[start:]))
    return float(total)


def cumulative_integral(x, y, *, reverse: bool = False) -> np.ndarray:
    """Running integral ``int_{x_0}^{x} y`` (or ``int_x^{x_end} y`` if ``reverse``).

    On a uniform grid with at least six points every interval is integrated
    through the quintic interpolating the six nearest samples, so each partial
    integral is sixth-order accurate.  Other grids use the cumulative
    trapezoid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if reverse:
        return -cumulative_integral(x[::-1], y[::-1])[::-1]
    if x.size < 6 or not _is_uniform(x):
        return np.concatenate([[0.0], _spi.cumulative_trapezoid(y, x)])
    h = (x[-1] - x[0]) / (x.size - 1)
    n = x.size
    k = np.arange(n - 1)
    start = np.clip(k - 2, 0, n - 6)
    pos = k - start
    parts = np.zeros(n - 1, dtype=np.result_type(y, float))
    for j in range(5):
        sel = pos == j
        if not np.any(sel):
            continue
        w = _NC6[j]
        st = start[sel]
        parts[sel] = sum(w[m] * y[st + m] for m in range(6))
    return np.concatenate([[0.0], np.cumsum(h * parts)])


def _is_uniform(x: np.ndarray) -> bool:
    d = np.diff(x)
    return bool(np.all(np.abs(d - d.mean()) <= 1e-9 * abs(d.mean())))


def _interval_weights(j: int, m: int = 6) -> np.ndarray:
    """Weights for ``int_j^{j+1}`` of the polynomial through nodes ``0..m-1``."""
    nodes = np.arange(m, dtype=float)
    moments = np.array([((j + 1) ** (p + 1) - j ** (p + 1)) / (p + 1) for p in range(m)])
    return np.linalg.solve(np.vander(nodes, increasing=True).T, moments)


_NC6 = [_interval_weights(j) for j in range(5)]


# ---------------------------------------------------------------------------
# Fourier pair


def fourier_pair(
    f: TemporalFunction, *, center: float = 0.0, leakage_tol: float = 1e-6
) -> SpectralFunction:
    """Unitary Fourier transform of a function sampled on a uniform time grid.

    The output grid has the same number of points, spacing ``2 pi / (N dt)``
    and is centred on ``center``.  :func:`inverse_fourier` with
    ``t_start = f.grid.points[0]`` reconstructs ``f`` exactly up to rounding.
    """
    grid = f.grid
    if not grid.is_uniform():
        raise GridError("the Fourier transform needs a uniform time grid")
    vals = np.asarray(f.values, dtype=complex)
    _check_leakage(vals, leakage_tol)
    n = vals.size
    dt = grid.step
    t0 = grid.points[0]
    dw = 2.0 * np.pi / (n * dt)
    w_start = center - (n // 2) * dw
    omega = w_start + dw * np.arange(n)
    steps = np.arange(n) * dt
    spec = n * np.fft.ifft(vals * np.exp(1j * w_start * steps))
    spec *= dt / SQRT_2PI * np.exp(1j * omega * t0)
    return SpectralFunction(FrequencyGrid(omega), spec)


def inverse_fourier(
    F: SpectralFunction, *, t_start: float, leakage_tol: float = 1e-6
) -> TemporalFunction:
    """Inverse of :func:`fourier_pair` onto ``t_start + n * 2 pi / (N dw)``."""
    grid = F.grid
    if not grid.is_uniform():
        raise GridError("the Fourier transform needs a uniform frequency grid")
    vals = np.asarray(F.values, dtype=complex)
    _check_leakage(vals, leakage_tol)
    n = vals.size
    dw = grid.step
    w0 = grid.points[0]
    dt = 2.0 * np.pi / (n * dw)
    t = t_start + dt * np.arange(n)
    sig = np.fft.fft(vals * np.exp(-1j * dw * np.arange(n) * t_start))
    sig *= dw / SQRT_2PI * np.exp(-1j * w0 * t)
    return TemporalFunction(TimeGrid(t), sig)


def _check_leakage(vals: np.ndarray, tol: float) -> None:
    peak = float(np.max(np.abs(vals))) if vals.size else 0.0
    if peak == 0.0:
        return
    edge = max(abs(vals[0]), abs(vals[-1]))
    if edge > tol * peak:
        raise WindowLeakageError(
            "function does not decay at the window edges",
            edge_ratio=float(edge / peak),
            tolerance=tol,
        )


# ---------------------------------------------------------------------------
# phase, delay, bandwidth


@dataclass(frozen=True)
class UnwrappedPhase:
    phase: np.ndarray  # NaN where the amplitude is below the floor
    defined: np.ndarray  # amplitude above the floor
    crossings: np.ndarray  # interval k -> k+1 (over defined points) passes through a zero


def unwrap_phase(T: SpectralFunction, floor: float = 1e-8) -> UnwrappedPhase:
    """Continuous phase of ``T`` with explicit handling of transmission zeros.

    Ordinary ``2 pi`` wraps are removed as usual.  When ``T`` passes through
    (or within a grid step of) a zero it changes sign, so consecutive phases
    differ by about ``pi``.  Such a jump is a sign flip of a real factor of
    ``T`` rather than accumulated phase; it is removed and the interval is
    flagged in ``crossings``.
    """
    vals = np.asarray(T.values, dtype=complex)
    mag = np.abs(vals)
    ok = mag > floor
    phase = np.full(vals.shape, np.nan)
    crossings = np.zeros(max(int(ok.sum()) - 1, 0), dtype=bool)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return UnwrappedPhase(phase, ok, crossings)
    raw = np.angle(vals[idx])
    d = np.angle(np.exp(1j * np.diff(raw)))
    big = np.abs(d) > 0.5 * np.pi
    d[big] -= np.pi * np.sign(d[big])
    crossings[:] = big
    phase[idx] = raw[0] + np.concatenate([[0.0], np.cumsum(d)])
    return UnwrappedPhase(phase, ok, crossings)


def derivative(x, y) -> np.ndarray:
    """First derivative on a (possibly non-uniform) grid.

    Interior points use the five-point Lagrange stencil (fourth order on smooth
    grids); the two outermost points on each side fall back to second-order
    one-sided differences.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    out = np.gradient(y, x, edge_order=2) if x.size >= 3 else np.zeros_like(y)
    if x.size < 5:
        return out
    xs = np.stack([x[k : x.size - 4 + k] for k in range(5)])
    ys = np.stack([y[k : y.size - 4 + k] for k in range(5)])
    xc = xs[2]
    acc = np.zeros_like(ys[0])
    for j in range(5):
        if j == 2:
            wj = sum(1.0 / (xc - xs[k]) for k in range(5) if k != 2)
        else:
            wj = 1.0 / (xs[j] - xc)
            for k in range(5):
                if k not in (j, 2):
                    wj = wj * (xc - xs[k]) / (xs[j] - xs[k])
        acc = acc + wj * ys[j]
    out = out.copy()
    out[2:-2] = acc
    return out


def _delay_core(T: SpectralFunction, floor: float):
    up = unwrap_phase(T, floor)
    idx = np.flatnonzero(up.defined)
    w = T.x
    tau = np.full(w.shape, np.nan)
    good = np.zeros(w.shape, dtype=bool)
    if idx.size < 3:
        return tau, good
    tau_sub = derivative(w[idx], up.phase[idx])
    ok_sub = np.ones(idx.size, dtype=bool)
    # a gap (undefined points) or a zero crossing poisons the neighbouring stencils
    gap = np.diff(idx) > 1
    bad = gap | up.crossings
    ok_sub &= ~_near(bad, 2)
    tau[idx[ok_sub]] = tau_sub[ok_sub]
    good[idx[ok_sub]] = True
    return tau, good


def _near(bad_intervals: np.ndarray, reach: int) -> np.ndarray:
    """Points within ``reach`` intervals of a flagged interval."""
    n = bad_intervals.size + 1
    hit = np.zeros(n, dtype=bool)
    for k in np.flatnonzero(bad_intervals):
        hit[max(0, k + 1 - reach) : min(n, k + reach + 1)] = True
    return hit


def group_delay(T: SpectralFunction, floor: float = 1e-8) -> SpectralFunction:
    """Group delay ``d arg T / d w`` (positive for a delaying filter).

    Points where ``|T| <= floor``, or whose finite-difference stencil straddles a
    transmission zero, are flagged undefined and hold NaN.
    """
    tau, good = _delay_core(T, floor)
    return SpectralFunction(T.grid, tau, defined=good)


def dispersion_metric(T: SpectralFunction, floor: float = 1e-8) -> float:
    """``int |d tau_g / d w| |T|^2 dw`` over the points where the delay is defined."""
    tau, good = _delay_core(T, floor)
    w = T.x
    idx = np.flatnonzero(good)
    if idx.size < 3:
        return 0.0
    slope = derivative(w[idx], tau[idx])
    integrand = slope * np.abs(T.values[idx]) ** 2
    keep = ~_near(np.diff(idx) > 1, 2)
    # integrate each contiguous run of trustworthy points on its own
    total = 0.0
    edges = np.flatnonzero(np.diff(np.concatenate([[0], keep.astype(int), [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        if b - a >= 2:
            total += integrate_abs(w[idx][a:b], integrand[a:b])
    return float(total)


def spectral_bandwidth(T: SpectralFunction, tail_tol: float = 1e-8) -> float:
    """``(1/pi) int |T|^2 dw`` over the grid.

    The mass beyond each end of the grid is estimated by extending the last
    sample with a Lorentzian ``1/w^2`` tail about the line centroid; if the
    estimate exceeds ``tail_tol`` of the integral a :class:`CoverageError`
    is raised.
    """
    p = T.abs2()
    if np.any(p > 1.0 + 1e-9):
        raise GridError("bandwidth needs |T| <= 1", max_abs_t=float(np.sqrt(p.max())))
    w = T.x
    total = float(integrate(w, p))
    if total <= 0.0:
        return 0.0
    centroid = float(integrate(w, w * p)) / total
    tail = p[0] * abs(w[0] - centroid) + p[-1] * abs(w[-1] - centroid)
    if tail > tail_tol * total:
        raise CoverageError(
            "grid does not cover the support of |T|^2",
            tail_fraction=float(tail / total),
            tolerance=tail_tol,
        )
    return total / np.pi


def unitarity_defect(
    T: SpectralFunction, R: SpectralFunction, D: Optional[SpectralFunction] = None
) -> float:
    """Largest pointwise deviation of ``|T|^2 + |R|^2 (+ |D|^2)`` from one."""
    s = T.abs2() + R.abs2()
    if D is not None:
        s = s + D.abs2()
    return float(np.max(np.abs(s - 1.0)))
