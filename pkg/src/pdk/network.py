"""Transmission and reflection spectra of discrete-state networks.

A network is a set of discrete states (resonance ``omega_i``) coupled to an
input continuum (rate ``gamma_i``), an output continuum (rate ``Gamma_i``), an
optional uncontrolled side continuum (rate ``mu_i``) and to each other through
real coherent couplings ``g_ij``.  In the frequency domain the amplitudes obey
``M(w) c = -sqrt(gamma) a_in`` with

    M_ij = -i Delta_i delta_ij
           + (sqrt(gamma_i gamma_j) + sqrt(Gamma_i Gamma_j) + sqrt(mu_i mu_j)) / 2
           + i g_ij,                                    Delta_i = w - omega_i.

With unit input on the input side the outputs are ``R = 1 - s_a^T M^-1 s_a``,
``T = s_b^T M^-1 s_a`` and ``D = s_m^T M^-1 s_a`` where ``s_a, s_b, s_m`` hold
the square roots of the three decay vectors.  The overall sign of ``T`` is a
convention; this one makes a single state give ``T = sqrt(gamma Gamma) /
((gamma + Gamma)/2 - i Delta)``.

Closed forms exist for parallel, series and hybrid (manifold) networks and are
evaluated without ever dividing by a detuning: every sum of the form
``sum_i w_i / Delta_i`` is carried as a pair ``(q, p)`` of polynomials so that
exact resonances give their analytic limits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InfeasibleError, ParameterError, SingularNetworkError, SpecError
from .recurrence import wallis_euler
from .spectral import FrequencyGrid, SpectralFunction

_RATIO_TOL = 1e-12


# ---------------------------------------------------------------------------
# network description


@dataclass(frozen=True)
class DiscreteState:
    omega: float
    gamma_in: float = 0.0
    gamma_out: float = 0.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.omega):
            raise ParameterError("resonance must be finite", omega=self.omega)
        for name in ("gamma_in", "gamma_out", "mu"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and non-negative", **{name: v})


@dataclass(frozen=True)
class Coupling:
    i: int
    j: int
    g: float

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise SpecError("a state cannot couple to itself", i=self.i)
        if not np.isfinite(self.g) or self.g < 0:
            raise SpecError("couplings are real and non-negative", g=self.g)


class Topology(str, Enum):
    SIMPLE = "simple"
    PARALLEL = "parallel"
    SERIES = "series"
    HYBRID = "hybrid"
    GENERAL = "general"


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable network description.

    ``manifolds`` lists the state indices of each manifold, in order from the
    input side to the output side, and is only used by hybrid networks.
    Degenerate states are allowed here so the direct solver can diagnose them;
    the closed forms reject them.
    """

    topology: Topology
    states: tuple[DiscreteState, ...]
    couplings: tuple[Coupling, ...] = ()
    manifolds: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if self.manifolds is not None:
            object.__setattr__(
                self, "manifolds", tuple(tuple(int(i) for i in m) for m in self.manifolds)
            )
        if not self.states:
            raise SpecError("a network needs at least one state")
        n = len(self.states)
        seen = set()
        for c in self.couplings:
            if not (0 <= c.i < n and 0 <= c.j < n):
                raise SpecError("coupling refers to a missing state", i=c.i, j=c.j)
            key = (min(c.i, c.j), max(c.i, c.j))
            if key in seen:
                raise SpecError("duplicate coupling", i=c.i, j=c.j)
            seen.add(key)
        getattr(self, f"_check_{self.topology.value}")()

    # -- topology checks -------------------------------------------------

    def _check_simple(self) -> None:
        if len(self.states) != 1 or self.couplings:
            raise SpecError("the simple model has exactly one uncoupled state")

    def _check_parallel(self) -> None:
        if any(c.g != 0 for c in self.couplings):
            raise SpecError("parallel networks have no coherent couplings")
        for k, s in enumerate(self.states):
            if s.gamma_in <= 0 or s.gamma_out <= 0:
                raise SpecError("every parallel state needs gamma_in, gamma_out > 0", state=k)

    def _check_series(self) -> None:
        n = len(self.states)
        for k, s in enumerate(self.states):
            if k > 0 and s.gamma_in > 0:
                raise SpecError("only the first series state couples to the input", state=k)
            if k < n - 1 and s.gamma_out > 0:
                raise SpecError("only the last series state couples to the output", state=k)
        pairs = {(min(c.i, c.j), max(c.i, c.j)) for c in self.couplings}
        if any(j - i != 1 for i, j in pairs):
            raise SpecError("series couplings must be nearest-neighbour")
        if pairs != {(k, k + 1) for k in range(n - 1)}:
            raise SpecError("every neighbouring series pair needs a coupling")

    def _check_hybrid(self) -> None:
        if not self.manifolds:
            raise SpecError("hybrid networks need a manifold list")
        flat = [i for m in self.manifolds for i in m]
        if sorted(flat) != list(range(len(self.states))) or any(not m for m in self.manifolds):
            raise SpecError("manifolds must partition the states")
        where = {i: k for k, m in enumerate(self.manifolds) for i in m}
        for c in self.couplings:
            if abs(where[c.i] - where[c.j]) != 1:
                raise SpecError("hybrid couplings only join adjacent manifolds", i=c.i, j=c.j)

    def _check_general(self) -> None:
        return None

    # -- matrices ----------------------------------------------------------

    @property
    def omegas(self) -> np.ndarray:
        return np.array([s.omega for s in self.states])

    def decay_roots(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ga = np.sqrt([s.gamma_in for s in self.states])
        gb = np.sqrt([s.gamma_out for s in self.states])
        gm = np.sqrt([s.mu for s in self.states])
        return ga, gb, gm

    def coupling_matrix(self) -> np.ndarray:
        n = len(self.states)
        g = np.zeros((n, n))
        for c in self.couplings:
            g[c.i, c.j] = g[c.j, c.i] = c.g
        return g

    def static_matrix(self) -> np.ndarray:
        """Frequency-independent part of ``M`` (decays plus couplings)."""
        ga, gb, gm = self.decay_roots()
        k = np.outer(ga, ga) + np.outer(gb, gb) + np.outer(gm, gm)
        return 0.5 * k + 1j * self.coupling_matrix()

    def poles(self) -> np.ndarray:
        """Complex resonances ``x - i y`` of the network (``y >= 0``)."""
        ga, gb, gm = self.decay_roots()
        k = np.outer(ga, ga) + np.outer(gb, gb) + np.outer(gm, gm)
        h = np.diag(self.omegas) + self.coupling_matrix() - 0.5j * k
        return np.linalg.eigvals(h)

    def adapted_grid(
        self, n: int = 4001, *, tail: float = 1e-9, background: float = 0.2
    ) -> FrequencyGrid:
        """Frequency grid refined around every pole (see ``resonance_adapted``)."""
        lam = self.poles()
        x = lam.real
        y = -lam.imag
        spread = float(np.ptp(x)) if x.size > 1 else 0.0
        scale = max(float(np.max(y)), spread, 1e-300)
        y = np.maximum(y, 1e-9 * scale)
        return FrequencyGrid.resonance_adapted(x, y, n, tail=tail, background=background)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "topology": self.topology.value,
            "units": "rad/time with a user-chosen time unit",
            "states": [
                {"omega": s.omega, "gamma_in": s.gamma_in, "gamma_out": s.gamma_out, "mu": s.mu}
                for s in self.states
            ],
            "couplings": [{"i": c.i, "j": c.j, "g": c.g} for c in self.couplings],
        }
        if self.manifolds is not None:
            d["manifolds"] = [list(m) for m in self.manifolds]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        try:
            states = tuple(
                DiscreteState(
                    float(s["omega"]),
                    float(s.get("gamma_in", 0.0)),
                    float(s.get("gamma_out", 0.0)),
                    float(s.get("mu", 0.0)),
                )
                for s in d["states"]
            )
            couplings = tuple(
                Coupling(int(c["i"]), int(c["j"]), float(c["g"])) for c in d.get("couplings", [])
            )
            manifolds = d.get("manifolds")
            return cls(Topology(d["topology"]), states, couplings, manifolds)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"malformed network description: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class TransferResult:
    """Reflection and transmission on a grid.

    ``R_out`` is the reflection seen from the output side (filled by the direct
    solver).  ``evaluator`` recomputes ``(T, R)`` at arbitrary frequencies and
    is used to refine peak positions beyond the grid resolution.
    """

    T: SpectralFunction
    R: SpectralFunction
    D: Optional[SpectralFunction] = None
    R_out: Optional[SpectralFunction] = None
    evaluator: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = field(
        default=None, compare=False, repr=False
    )

    @property
    def grid(self) -> FrequencyGrid:
        return self.T.grid

    def flux_defect(self) -> float:
        s = self.T.abs2() + self.R.abs2()
        if self.D is not None:
            s = s + self.D.abs2()
        return float(np.max(np.abs(s - 1.0)))

    def phase_relation_defect(self) -> float:
        """Deviation from ``R_in^* T + T^* R_out = 0`` (unitarity of the 2x2 S matrix).

        Without an output-side reflection the symmetric form ``R^* T + R T^*``
        is used, which is only expected to vanish for mirror-symmetric networks.
        """
        t = self.T.values
        r = self.R.values
        r2 = self.R_out.values if self.R_out is not None else r
        return float(np.max(np.abs(np.conj(r) * t + np.conj(t) * r2)))


def _result(grid, t, r, evaluator=None, d=None, r_out=None) -> TransferResult:
    mk = lambda v: None if v is None else SpectralFunction(grid, v)  # noqa: E731
    return TransferResult(mk(t), mk(r), mk(d), mk(r_out), evaluator)


def _as_points(grid) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.points
    return np.atleast_1d(np.asarray(grid, dtype=float))


# ---------------------------------------------------------------------------
# pole sums


def _pole_sums(omegas, weights, w) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(p, q)`` with ``q / p = sum_j weights_j / (w - omegas_j)``.

    Both are divided by ``prod_j max(1, |Delta_j|)`` so neither overflows, and
    ``p`` vanishes (rather than ``q`` blowing up) at an exact resonance.
    """
    om = np.asarray(omegas, dtype=float)
    wt = np.asarray(weights, dtype=float)
    d = np.asarray(w, dtype=float)[:, None] - om[None, :]
    s = np.maximum(1.0, np.abs(d))
    x = d / s
    ones = np.ones((d.shape[0], 1))
    pre = np.concatenate([ones, np.cumprod(x, axis=1)], axis=1)
    suf = np.concatenate([np.cumprod(x[:, ::-1], axis=1)[:, ::-1], ones], axis=1)
    others = pre[:, :-1] * suf[:, 1:]
    p = pre[:, -1]
    q = np.sum((wt / s) * others, axis=1)
    return p, q


def _reject_degenerate(omegas, what: str) -> None:
    om = np.sort(np.asarray(omegas, dtype=float))
    if om.size > 1 and np.any(np.diff(om) == 0):
        raise SpecError(f"degenerate states in one {what} are forced to decouple")


# ---------------------------------------------------------------------------
# closed forms


def transfer_simple(gamma: float, Gamma: float, omega0: float, grid) -> TransferResult:
    """Single two-sided state (a Fabry-Perot-like resonance)."""
    if gamma < 0 or Gamma < 0 or gamma + Gamma <= 0:
        raise ParameterError("decays must be non-negative and not both zero", gamma=gamma, Gamma=Gamma)

    def ev(w):
        d = np.asarray(w, dtype=float) - omega0
        den = 0.5 * (gamma + Gamma) - 1j * d
        return np.sqrt(gamma * Gamma) / den, (0.5 * (Gamma - gamma) - 1j * d) / den

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def transfer_parallel_unbalanced(states: Sequence[DiscreteState], k: float, grid) -> TransferResult:
    """Parallel network with ``Gamma_i = k gamma_i`` for every state.

    With ``h = sum_i gamma_i / (2 Delta_i)``::

        R = (i - (k - 1) h) / (i - (k + 1) h),   T = 2 i sqrt(k) h / (1 + i (k + 1) h)
    """
    if k <= 0:
        raise ParameterError("imbalance ratio must be positive", k=k)
    gam = np.array([s.gamma_in for s in states])
    if np.any(gam <= 0):
        raise SpecError("every state needs gamma_in > 0")
    for idx, s in enumerate(states):
        if s.mu != 0:
            raise SpecError("closed forms do not include side channels", state=idx)
        if abs(s.gamma_out - k * s.gamma_in) > _RATIO_TOL * max(1.0, k * s.gamma_in):
            raise SpecError("decay ratio differs from k", state=idx, ratio=s.gamma_out / s.gamma_in, k=k)
    om = np.array([s.omega for s in states])
    _reject_degenerate(om, "parallel manifold")

    def ev(w):
        p, q = _pole_sums(om, gam / 2.0, np.atleast_1d(w))
        den = p + 1j * (k + 1) * q
        return 2j * np.sqrt(k) * q / den, (p + 1j * (k - 1) * q) / den

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def transfer_parallel_homogeneous(omegas, gamma: float, Gamma: float, grid) -> TransferResult:
    """Parallel network whose states share ``gamma`` and ``Gamma``.

    With ``F = sum_i 1 / Delta_i`` and ``kappa = (gamma + Gamma)/2``::

        R = (i - (Gamma - gamma)/2 F) / (i - kappa F),   T = i sqrt(gamma Gamma) F / (1 + i kappa F)
    """
    if gamma <= 0 or Gamma <= 0:
        raise ParameterError("decays must be positive", gamma=gamma, Gamma=Gamma)
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    _reject_degenerate(om, "parallel manifold")
    kap = 0.5 * (gamma + Gamma)

    def ev(w):
        p, q = _pole_sums(om, np.ones_like(om), np.atleast_1d(w))
        den = p + 1j * kap * q
        return 1j * np.sqrt(gamma * Gamma) * q / den, (p + 0.5j * (Gamma - gamma) * q) / den

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def series_coefficients(omegas, gamma: float, Gamma: float, couplings, w):
    """Wallis-Euler coefficients ``(a_n, b_n)`` of a series chain.

    ``b_1 = gamma/2 - i Delta_1``, ``b_n = -i Delta_n``, ``b_N = Gamma/2 - i Delta_N``
    (``b_1 = (gamma + Gamma)/2 - i Delta_1`` for one state), ``a_1 = -gamma`` and
    ``a_n = g_{n-1,n}^2``.
    """
    om = np.asarray(omegas, dtype=float)
    n = om.size
    d = np.asarray(w, dtype=float)[None, :] - om[:, None]
    b = -1j * d
    b[0] += 0.5 * gamma
    b[-1] += 0.5 * Gamma
    a = np.empty_like(b)
    a[0] = -gamma
    if n > 1:
        a[1:] = (np.asarray(couplings, dtype=float) ** 2)[:, None]
    return a, b


def transfer_series(omegas, gamma: float, Gamma: float, couplings, grid) -> TransferResult:
    """Series chain; ``R = A_N / B_N`` and ``T = sqrt(gamma Gamma) (-i)^{N-1} prod g / B_N``."""
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    g = np.atleast_1d(np.asarray(couplings, dtype=float)) if len(om) > 1 else np.zeros(0)
    if om.size == 0:
        raise SpecError("empty network")
    if g.size != om.size - 1:
        raise SpecError("a series chain of N states needs N-1 couplings", states=om.size, couplings=g.size)
    if gamma <= 0 or Gamma <= 0 or np.any(g < 0):
        raise ParameterError("series decays must be positive and couplings non-negative")
    pref = np.sqrt(gamma * Gamma) * (-1j) ** (om.size - 1)

    def ev(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        a, b = series_coefficients(om, gamma, Gamma, g, w)
        tf = np.repeat(g[:, None], w.size, axis=1)
        r, t = wallis_euler(a, b, tf)
        return pref * t, r

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def _chain_rows_unbalanced(manifolds, w):
    """Row coefficients of the manifold-sum system for rank-one couplings.

    Each manifold ``k`` has effective rates ``gamma_i^(k)`` (``gamma_in``) and a
    common ratio ``k_k = Gamma_i^(k) / gamma_i^(k)``; manifolds ``k`` and
    ``k+1`` couple through ``g_ij = sqrt(Gamma_i^(k) gamma_j^(k+1)) / 2``.
    """
    pq = []
    ratios = []
    for m in manifolds:
        om = np.array([s.omega for s in m])
        gam = np.array([s.gamma_in for s in m])
        pq.append(_pole_sums(om, gam / 2.0, w))
        ratios.append(m[0].gamma_out / m[0].gamma_in)
    return pq, np.array(ratios)


def _check_unbalanced(manifolds) -> None:
    if not manifolds:
        raise SpecError("empty network")
    for k, m in enumerate(manifolds):
        if not m:
            raise SpecError("empty manifold", manifold=k)
        gam = np.array([s.gamma_in for s in m])
        gout = np.array([s.gamma_out for s in m])
        if np.any(gam <= 0) or np.any(gout <= 0):
            raise SpecError("effective decays must be positive", manifold=k)
        if any(s.mu != 0 for s in m):
            raise SpecError("closed forms do not include side channels", manifold=k)
        ratio = gout / gam
        if np.ptp(ratio) > _RATIO_TOL * ratio.max():
            raise SpecError("decays are not uniformly unbalanced within the manifold", manifold=k)
        _reject_degenerate([s.omega for s in m], "manifold")


def transfer_hybrid_unbalanced(manifolds: Sequence[Sequence[DiscreteState]], grid) -> TransferResult:
    """Manifold chain with uniformly unbalanced effective decays.

    With ``h_k = sum_i gamma_i^(k) / (2 Delta_i^(k))`` the reflection is the
    continued fraction ::

        R = 1 - 2 h_1 / (h_1 - i + k_1 h_1 h_2 / (-i + k_2 h_2 h_3 / ( ...
                 + k_{M-1} h_{M-1} h_M / (k_M h_M - i))))

    (for a single manifold ``R = 1 - 2h / ((1 + k) h - i)``), evaluated by the
    Wallis-Euler recurrence after clearing every ``h_k`` denominator.
    """
    manifolds = [list(m) for m in manifolds]
    _check_unbalanced(manifolds)
    M = len(manifolds)

    def ev(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        pq, kr = _chain_rows_unbalanced(manifolds, w)
        p = np.array([x[0] for x in pq])
        q = np.array([x[1] for x in pq])
        b = p.astype(complex)
        if M == 1:
            b[0] = p[0] + 1j * (1.0 + kr[0]) * q[0]
        else:
            b[0] = p[0] + 1j * q[0]
            b[-1] = p[-1] + 1j * kr[-1] * q[-1]
        a = np.empty_like(b)
        a[0] = -2j * q[0]
        for n in range(1, M):
            a[n] = -kr[n - 1] * q[n - 1] * q[n]
        tf = np.array([np.sqrt(kr[n - 1]) * q[n] for n in range(1, M)]).reshape(M - 1, w.size)
        r, t = wallis_euler(a, b, tf)
        return 2j * np.sqrt(kr[-1]) * q[0] * t, r

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def transfer_hybrid_homogeneous(
    manifolds: Sequence[Sequence[float]], gamma: float, Gamma: float, couplings, grid
) -> TransferResult:
    """Manifold chain with uniform decays and uniform inter-manifold couplings.

    With ``f_k = sum_i 1 / Delta_i^(k)`` the reflection is ::

        R = 1 - gamma f_1 / (gamma f_1 / 2 - i + g_12^2 f_1 f_2 / (-i + ...
                 + g_{M-1,M}^2 f_{M-1} f_M / (Gamma f_M / 2 - i)))

    (``R = 1 - gamma f / ((gamma + Gamma) f / 2 - i)`` for a single manifold).
    """
    mans = [np.atleast_1d(np.asarray(m, dtype=float)) for m in manifolds]
    M = len(mans)
    g = np.atleast_1d(np.asarray(couplings, dtype=float)) if M > 1 else np.zeros(0)
    if M == 0 or any(m.size == 0 for m in mans):
        raise SpecError("empty network or manifold")
    if g.size != M - 1:
        raise SpecError("M manifolds need M-1 couplings", manifolds=M, couplings=g.size)
    if gamma <= 0 or Gamma <= 0 or np.any(g < 0):
        raise ParameterError("decays must be positive and couplings non-negative")
    for m in mans:
        _reject_degenerate(m, "manifold")

    def ev(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        pq = [_pole_sums(m, np.ones_like(m), w) for m in mans]
        p = np.array([x[0] for x in pq])
        q = np.array([x[1] for x in pq])
        b = p.astype(complex)
        b[0] = b[0] + 0.5j * gamma * q[0]
        b[-1] = b[-1] + 0.5j * Gamma * q[-1]
        a = np.empty_like(b)
        a[0] = -1j * gamma * q[0]
        for n in range(1, M):
            a[n] = -(g[n - 1] ** 2) * q[n - 1] * q[n]
        tf = np.array([g[n - 1] * q[n] for n in range(1, M)]).reshape(M - 1, w.size)
        r, t = wallis_euler(a, b, tf)
        return 1j * np.sqrt(gamma * Gamma) * q[0] * t, r

    t, r = ev(_as_points(grid))
    return _result(grid, t, r, ev)


def transfer_hybrid(manifolds, grid, mode: str = "homogeneous", **kw) -> TransferResult:
    """Dispatch to the uniformly-unbalanced or homogeneous manifold closed form."""
    if mode in ("uniformly-unbalanced", "unbalanced"):
        return transfer_hybrid_unbalanced(manifolds, grid)
    if mode == "homogeneous":
        return transfer_hybrid_homogeneous(manifolds, kw["gamma"], kw["Gamma"], kw["couplings"], grid)
    raise ParameterError("unknown hybrid mode", mode=mode)


# ---------------------------------------------------------------------------
# spec builders for the closed-form families


def simple_spec(gamma: float, Gamma: float, omega0: float = 0.0, mu: float = 0.0) -> NetworkSpec:
    return NetworkSpec(Topology.SIMPLE, (DiscreteState(omega0, gamma, Gamma, mu),))


def parallel_spec(states: Iterable[DiscreteState]) -> NetworkSpec:
    return NetworkSpec(Topology.PARALLEL, tuple(states))


def series_spec(omegas, gamma: float, Gamma: float, couplings) -> NetworkSpec:
    om = list(np.atleast_1d(omegas))
    n = len(om)
    states = []
    for k, w in enumerate(om):
        states.append(
            DiscreteState(float(w), gamma if k == 0 else 0.0, Gamma if k == n - 1 else 0.0)
        )
    cps = tuple(Coupling(k, k + 1, float(g)) for k, g in enumerate(np.atleast_1d(couplings)[: n - 1]))
    return NetworkSpec(Topology.SERIES, tuple(states), cps)


def hybrid_unbalanced_spec(manifolds: Sequence[Sequence[DiscreteState]]) -> NetworkSpec:
    """Physical network behind :func:`transfer_hybrid_unbalanced`.

    Only the first manifold keeps its input decay and only the last its output
    decay; the remaining effective rates become coherent couplings.
    """
    manifolds = [list(m) for m in manifolds]
    _check_unbalanced(manifolds)
    M = len(manifolds)
    states, groups, offsets = [], [], []
    for k, m in enumerate(manifolds):
        offsets.append(len(states))
        groups.append(tuple(range(len(states), len(states) + len(m))))
        for s in m:
            states.append(
                DiscreteState(
                    s.omega, s.gamma_in if k == 0 else 0.0, s.gamma_out if k == M - 1 else 0.0
                )
            )
    cps = []
    for k in range(M - 1):
        for i, si in enumerate(manifolds[k]):
            for j, sj in enumerate(manifolds[k + 1]):
                g = 0.5 * np.sqrt(si.gamma_out * sj.gamma_in)
                cps.append(Coupling(offsets[k] + i, offsets[k + 1] + j, float(g)))
    return NetworkSpec(Topology.HYBRID, tuple(states), tuple(cps), tuple(groups))


def hybrid_homogeneous_spec(manifolds, gamma: float, Gamma: float, couplings) -> NetworkSpec:
    mans = [list(np.atleast_1d(m)) for m in manifolds]
    M = len(mans)
    states, groups = [], []
    for k, m in enumerate(mans):
        groups.append(tuple(range(len(states), len(states) + len(m))))
        for w in m:
            states.append(
                DiscreteState(float(w), gamma if k == 0 else 0.0, Gamma if k == M - 1 else 0.0)
            )
    g = np.atleast_1d(couplings)
    cps = [
        Coupling(i, j, float(g[k]))
        for k in range(M - 1)
        for i in groups[k]
        for j in groups[k + 1]
    ]
    return NetworkSpec(Topology.HYBRID, tuple(states), tuple(cps), tuple(groups))


def transfer_closed_form(spec: NetworkSpec, grid) -> TransferResult:
    """Evaluate ``spec`` with the closed form matching its topology."""
    st = spec.states
    if any(s.mu > 0 for s in st):
        raise SpecError("closed forms do not include side channels; use transfer_direct")
    if spec.topology is Topology.SIMPLE:
        s = st[0]
        return transfer_simple(s.gamma_in, s.gamma_out, s.omega, grid)
    if spec.topology is Topology.PARALLEL:
        k = st[0].gamma_out / st[0].gamma_in
        return transfer_parallel_unbalanced(st, k, grid)
    if spec.topology is Topology.SERIES:
        g = spec.coupling_matrix()
        cps = [g[k, k + 1] for k in range(len(st) - 1)]
        return transfer_series(spec.omegas, st[0].gamma_in, st[-1].gamma_out, cps, grid)
    if spec.topology is Topology.HYBRID:
        return transfer_hybrid_unbalanced(_effective_manifolds(spec), grid)
    raise SpecError("no closed form for this topology", topology=spec.topology.value)


def _effective_manifolds(spec: NetworkSpec) -> list[list[DiscreteState]]:
    """Recover effective per-manifold rates from a hybrid spec with rank-one couplings.

    The factorisation has a gauge freedom; it is fixed by setting the ratio
    ``k`` of every manifold but the last to one.
    """
    groups = spec.manifolds
    g = spec.coupling_matrix()
    st = spec.states
    M = len(groups)
    for k, grp in enumerate(groups):
        for i in grp:
            s = st[i]
            if (k > 0 and s.gamma_in > 0) or (k < M - 1 and s.gamma_out > 0):
                raise SpecError("only the outer manifolds may couple to the continua", state=i)
    amp = [np.sqrt([st[i].gamma_in for i in groups[0]])]
    if np.any(amp[0] <= 0):
        raise SpecError("every input-manifold state needs gamma_in > 0")
    for k in range(M - 1):
        block = g[np.ix_(groups[k], groups[k + 1])]
        nxt = 2.0 * block / amp[k][:, None]
        if np.any(nxt <= 0) or np.ptp(nxt, axis=0).max() > 1e-9 * nxt.max():
            raise SpecError("inter-manifold couplings are not rank one", manifolds=(k, k + 1))
        amp.append(nxt.mean(axis=0))
    gout = np.array([st[i].gamma_out for i in groups[-1]])
    ratio_last = gout / amp[-1] ** 2
    if np.any(gout <= 0) or np.ptp(ratio_last) > 1e-9 * ratio_last.max():
        raise SpecError("output decays are not uniformly unbalanced")
    out = []
    for k, grp in enumerate(groups):
        gam = amp[k] ** 2
        kk = ratio_last.mean() if k == M - 1 else 1.0
        out.append([DiscreteState(st[i].omega, float(gm), float(kk * gm)) for i, gm in zip(grp, gam)])
    return out


# ---------------------------------------------------------------------------
# direct solve


def transfer_direct(spec: NetworkSpec, grid, *, cond_limit: float = 1e13) -> TransferResult:
    """Solve the amplitude equations frequency by frequency.

    Works for any topology, including loops and side channels.  A (near-)
    singular system raises :class:`SingularNetworkError` naming the first
    offending frequency.
    """
    ga, gb, gm = spec.decay_roots()
    base = spec.static_matrix()
    om = spec.omegas
    rhs = np.stack([ga, gb, gm], axis=1).astype(complex)
    has_side = bool(np.any(gm > 0))

    def ev(w, check=True):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        m = np.broadcast_to(base, (w.size,) + base.shape).copy()
        idx = np.arange(om.size)
        m[:, idx, idx] += -1j * (w[:, None] - om[None, :])
        if check:
            sv = np.linalg.svd(m, compute_uv=False)
            bad = sv[:, -1] <= sv[:, 0] / cond_limit
            if np.any(bad):
                k = int(np.flatnonzero(bad)[0])
                raise SingularNetworkError(
                    "singular amplitude equations (degenerate or dark states)",
                    frequency=float(w[k]),
                )
        try:
            x = np.linalg.solve(m, np.broadcast_to(rhs, (w.size,) + rhs.shape))
        except np.linalg.LinAlgError as exc:
            raise SingularNetworkError("singular amplitude equations", frequency=float(w[0])) from exc
        xa = x[:, :, 0]
        xb = x[:, :, 1]
        r = 1.0 - xa @ ga
        t = xa @ gb
        d = xa @ gm
        r_out = 1.0 - xb @ gb
        return t, r, d, r_out

    pts = _as_points(grid)
    t, r, d, r_out = ev(pts)
    evaluator = lambda w: ev(w, check=False)[:2]  # noqa: E731
    return _result(grid, t, r, evaluator, d if has_side else None, r_out)


# ---------------------------------------------------------------------------
# perfect transmission


def find_perfect_transmission(
    result: TransferResult, tol: float = 1e-6, *, iterations: int = 80
) -> np.ndarray:
    """Frequencies of local maxima of ``|T|^2`` that reach ``1 - tol``.

    Grid maxima are refined by bisection on the sign of ``Re(T^* dT/dw)``
    when the result carries an evaluator (the derivative comes from a
    five-point stencil at a fixed fraction of the grid spacing); otherwise
    by a parabola through three points.
    """
    w = result.grid.points
    p = result.T.abs2()
    if w.size < 3:
        return np.zeros(0)
    inner = np.flatnonzero((p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:])) + 1
    if inner.size == 0:
        return np.zeros(0)
    lo = w[inner - 1].copy()
    hi = w[inner + 1].copy()
    ev = result.evaluator
    if ev is not None:
        h = 0.02 * np.minimum(w[inner] - lo, hi - w[inner])
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            t0 = ev(mid)[0]
            dt = (
                8.0 * (ev(mid + h)[0] - ev(mid - h)[0]) - (ev(mid + 2 * h)[0] - ev(mid - 2 * h)[0])
            ) / (12.0 * h)
            up = np.real(np.conj(t0) * dt) > 0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= 2 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
                break
        peak = 0.5 * (lo + hi)
        val = np.abs(ev(peak)[0]) ** 2
    else:
        x0, x1, x2 = w[inner - 1], w[inner], w[inner + 1]
        y0, y1, y2 = p[inner - 1], p[inner], p[inner + 1]
        num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
        den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
        with np.errstate(divide="ignore", invalid="ignore"):
            peak = np.where(den != 0, x1 - 0.5 * num / den, x1)
        peak = np.clip(peak, x0, x2)
        val = np.maximum(y1, p[inner])
    keep = val >= 1.0 - tol
    found = np.sort(peak[keep])
    if found.size > 1:
        scale = max(1.0, float(np.max(np.abs(found))))
        merged = [found[0]]
        for x in found[1:]:
            if x - merged[-1] > 1e-9 * scale:
                merged.append(x)
        found = np.array(merged)
    return found


# ---------------------------------------------------------------------------
# design


def design_two_state_series(omega1: float, omega2: float, gamma: float, Gamma: float) -> tuple[float, float]:
    """Coupling and frequency giving perfect transmission through two detuned states.

    Perfect transmission needs ``gamma Delta_2 = Gamma Delta_1`` and
    ``g^2 = Delta_1 Delta_2 + gamma Gamma / 4``.  Writing the resonances
    relative to their midpoint ``c`` (``omega_i' = omega_i - c``)::

        omega* = c + (Gamma omega_1' - gamma omega_2') / (Gamma - gamma)
        g^2    = gamma Gamma / 4 + ((Gamma omega_1' - gamma omega_2') / (Gamma - gamma))^2
                 - ((omega_1 - omega_2) / 2)^2
    """
    if gamma <= 0 or Gamma <= 0:
        raise ParameterError("decays must be positive", gamma=gamma, Gamma=Gamma)
    if gamma == Gamma:
        if omega1 == omega2:
            return float(omega1), 0.5 * np.sqrt(gamma * Gamma)
        raise InfeasibleError(
            "balanced decays with detuned states: the critical coupling is infinite",
            omega1=omega1,
            omega2=omega2,
        )
    c = 0.5 * (omega1 + omega2)
    x = (Gamma * (omega1 - c) - gamma * (omega2 - c)) / (Gamma - gamma)
    rad = 0.25 * gamma * Gamma + x * x - (0.5 * (omega1 - omega2)) ** 2
    if rad < 0:
        raise InfeasibleError("no real coupling gives perfect transmission", radicand=rad)
    return float(c + x), float(np.sqrt(rad))
