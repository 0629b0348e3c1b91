"""Run configurations for the command line front-end.

Every command reads one JSON object.  Paths inside it are resolved relative
to the config file.  Unknown keys are rejected so that typos surface as
configuration errors instead of silently falling back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .errors import ConfigError, PDKError
from .io import load_json, read_csv
from .network import NetworkSpec
from .spectral import FrequencyGrid

COMMANDS = ("transmit", "wavepacket", "amplify", "povm", "design")


def _take(d: Any, cls, where: str) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    extra = sorted(set(d) - names)
    if extra:
        raise ConfigError(f"unknown keys in {where}", keys=extra, allowed=sorted(names))
    return dict(d)


def _build(cls, d: Any, where: str):
    kw = _take(d, cls, where)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


# ---------------------------------------------------------------------------
# building blocks


@dataclass(frozen=True)
class GridConfig:
    """Frequency grid: ``adapted`` to the network poles or ``uniform`` on ``[start, stop]``."""

    kind: str = "adapted"
    points: int = 4001
    tail: float = 1e-9
    background: float = 0.2
    start: Optional[float] = None
    stop: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("adapted", "uniform"):
            raise ConfigError("grid kind must be 'adapted' or 'uniform'", kind=self.kind)
        if int(self.points) != self.points or self.points < 8:
            raise ConfigError("grid needs an integer number of points >= 8", points=self.points)
        if self.kind == "uniform" and (self.start is None or self.stop is None or not self.stop > self.start):
            raise ConfigError("uniform grid needs start < stop")

    def build(self, network: Optional[NetworkSpec], points: Optional[int] = None) -> FrequencyGrid:
        n = int(points or self.points)
        if self.kind == "uniform":
            return FrequencyGrid.uniform(self.start, self.stop, n)
        if network is None:
            raise ConfigError("an adapted grid needs a network")
        return network.adapted_grid(n, tail=self.tail, background=self.background)


def load_network(d: dict, base: Path, key: str = "network") -> Optional[NetworkSpec]:
    """Network from ``network`` (inline object or ``"transparent"``) or ``network_file``.

    Returns ``None`` for a transparent filter (``T = 1``).
    """
    inline = d.get(key)
    path = d.get(f"{key}_file")
    if (inline is None) == (path is None):
        raise ConfigError(f"give exactly one of '{key}' and '{key}_file'")
    if inline == "transparent":
        return None
    if path is not None:
        inline = load_json(base / path)
    if not isinstance(inline, dict):
        raise ConfigError("network must be an object or 'transparent'")
    return NetworkSpec.from_dict(inline)


@dataclass(frozen=True)
class TargetConfig:
    """Target retrodictive wavepacket.

    ``kind`` is ``gaussian``, ``orthogonal`` (smoothed first-order
    Hermite-Gaussian with hole half-width ``z`` and smoothing ``s``) or
    ``samples`` (CSV with columns ``t, amplitude, phase``).
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    t0: float = 0.0
    omega0: float = 0.0
    z: float = 0.5
    s: float = 0.5
    n_sigma: float = 8.0
    points_per_sigma: int = 256
    file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "orthogonal", "samples"):
            raise ConfigError("target kind must be gaussian, orthogonal or samples", kind=self.kind)
        if self.kind == "samples" and not self.file:
            raise ConfigError("sampled targets need a file")


@dataclass(frozen=True)
class DetectionTime:
    """Detection time, absolute (``T``) or in units of the target width after ``t0`` (``T_sigma``)."""

    T: Optional[float] = None
    T_sigma: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.T is None) == (self.T_sigma is None):
            raise ConfigError("give exactly one of 'T' and 'T_sigma'")

    def resolve(self, target: TargetConfig) -> float:
        if self.T is not None:
            return float(self.T)
        return float(target.t0 + self.T_sigma * target.sigma)


@dataclass(frozen=True)
class WavepacketConfig:
    target: TargetConfig
    detection: DetectionTime
    base: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, d: dict, base: Path) -> "WavepacketConfig":
        d = dict(d)
        unknown = sorted(set(d) - {"target", "detection"})
        if unknown:
            raise ConfigError("unknown keys in wavepacket config", keys=unknown)
        if "target" not in d or "detection" not in d:
            raise ConfigError("wavepacket config needs 'target' and 'detection'")
        return cls(_build(TargetConfig, d["target"], "target"), _build(DetectionTime, d["detection"], "detection"), base)


# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class TransmitConfig:
    """Spectra of one network.

    ``solver`` is ``auto`` (closed form when the topology has one),
    ``closed_form`` or ``direct``.  ``window`` restricts the perfect-transmission
    count to ``[lo, hi]``.
    """

    network: Optional[NetworkSpec]
    grid: GridConfig
    solver: str = "auto"
    perfect_tol: float = 1e-6
    window: Optional[tuple[float, float]] = None

    @classmethod
    def from_dict(cls, d: dict, base: Path) -> "TransmitConfig":
        allowed = {"network", "network_file", "grid", "solver", "perfect_tol", "window"}
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ConfigError("unknown keys in transmit config", keys=unknown)
        net = load_network(d, base)
        if net is None:
            raise ConfigError("transmit needs a network")
        solver = d.get("solver", "auto")
        if solver not in ("auto", "closed_form", "direct"):
            raise ConfigError("solver must be auto, closed_form or direct", solver=solver)
        win = d.get("window")
        if win is not None and (len(win) != 2 or not win[1] > win[0]):
            raise ConfigError("window must be [lo, hi] with lo < hi")
        return cls(net, _build(GridConfig, d.get("grid"), "grid"), solver, float(d.get("perfect_tol", 1e-6)), None if win is None else (float(win[0]), float(win[1])))


@dataclass(frozen=True)
class MonteCarloConfig:
    samples: int = 100_000
    n_bar: float = 1.0
    G_values: tuple = (2, 4, 16)


@dataclass(frozen=True)
class AmplifyConfig:
    """SNR sweep over ``G_values`` (a list, or ``{"start", "stop", "factor"}`` geometric)."""

    G_values: tuple
    n_a: int = 1
    delta_n_b: float = 1.0
    g: int = 2
    monte_carlo: Optional[MonteCarloConfig] = None

    @classmethod
    def from_dict(cls, d: dict, base: Path) -> "AmplifyConfig":
        allowed = {"G_values", "n_a", "delta_n_b", "g", "monte_carlo"}
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ConfigError("unknown keys in amplify config", keys=unknown)
        gv = d.get("G_values", {"start": 2, "stop": 1024, "factor": 2})
        if isinstance(gv, dict):
            try:
                start, stop, factor = gv["start"], gv["stop"], gv.get("factor", 2)
            except KeyError as exc:
                raise ConfigError("geometric G_values need start and stop") from exc
            if not (start >= 1 and stop >= start and factor > 1):
                raise ConfigError("geometric G_values need 1 <= start <= stop and factor > 1")
            vals = []
            x = start
            while x <= stop * (1 + 1e-12):
                vals.append(x)
                x *= factor
            gv = vals
        if not isinstance(gv, list) or not gv:
            raise ConfigError("G_values must be a non-empty list")
        mc = d.get("monte_carlo")
        mc_cfg = None
        if mc is not None:
            mc_cfg = _build(MonteCarloConfig, mc, "monte_carlo")
            mc_cfg = MonteCarloConfig(int(mc_cfg.samples), float(mc_cfg.n_bar), tuple(mc_cfg.G_values))
        return cls(tuple(gv), int(d.get("n_a", 1)), float(d.get("delta_n_b", 1.0)), int(d.get("g", 2)), mc_cfg)


@dataclass(frozen=True)
class DetectorConfig:
    """Scalar detector fields.

    Occupations come either directly (``n_bar``, ``n_bar_prime``) or from
    thermal energies (``kT`` with ``omega_prime``; ``kT_prime`` with
    ``omega_trigger``).  ``trigger_weight`` may be ``"auto"`` to use the
    weight of the designed trigger amplitude.
    """

    eta: float = 1.0
    k_min: Optional[int] = 1
    clicks: Optional[list] = None
    G: int = 1
    n_bar: Optional[float] = None
    n_bar_prime: Optional[float] = None
    kT: float = 0.0
    kT_prime: float = 0.0
    omega_prime: Optional[float] = None
    omega_trigger: Optional[float] = None
    hbar: float = 1.0
    trigger_weight: Union[float, str] = 1.0


@dataclass(frozen=True)
class TriggerConfig:
    """Trigger spectrum source: a designed wavepacket, a schedule CSV, or mode matching.

    ``schedule_file`` holds columns ``t, kappa, delta`` with the detection time
    at the last row.  ``pad`` and ``center`` control the transform.
    """

    wavepacket: Optional[WavepacketConfig] = None
    schedule_file: Optional[str] = None
    mode_match: Optional["SpectrumTarget"] = None
    pad: int = 4
    center: float = 0.0


@dataclass(frozen=True)
class SpectrumTarget:
    """Gaussian target spectrum ``|f(w)|^2`` of standard deviation ``sigma_omega`` on a uniform grid."""

    sigma_omega: float = 0.5
    center: float = 0.0
    span: float = 20.0
    points: int = 4096
    detection_time: float = 0.0
    floor: float = 1e-8


@dataclass(frozen=True)
class SuperResolutionConfig:
    epsilon: float = 0.01
    eta: float = 0.1
    trials: int = 1_000_000


@dataclass(frozen=True)
class FluctuationConfig:
    laws: dict
    samples: int = 256
    strict: bool = False


@dataclass(frozen=True)
class POVMConfig:
    network: Optional[NetworkSpec]
    trigger: Optional[TriggerConfig]
    detector: DetectorConfig
    uncertainty: bool = True
    fluctuations: Optional[FluctuationConfig] = None
    super_resolution: Optional[SuperResolutionConfig] = None
    solver: str = "auto"
    base: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, d: dict, base: Path) -> "POVMConfig":
        allowed = {
            "network",
            "network_file",
            "trigger",
            "detector",
            "uncertainty",
            "fluctuations",
            "super_resolution",
            "solver",
        }
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ConfigError("unknown keys in povm config", keys=unknown)
        sr = d.get("super_resolution")
        sr_cfg = _build(SuperResolutionConfig, sr, "super_resolution") if sr is not None else None
        if "trigger" not in d:
            if sr_cfg is None:
                raise ConfigError("povm config needs a 'trigger' (or only 'super_resolution')")
            return cls(None, None, DetectorConfig(), False, None, sr_cfg, "auto", base)
        net = load_network(d, base)
        trig = _take(d["trigger"], TriggerConfig, "trigger")
        sources = [k for k in ("wavepacket", "schedule_file", "mode_match") if trig.get(k) is not None]
        if len(sources) != 1:
            raise ConfigError("trigger needs exactly one of wavepacket, schedule_file, mode_match")
        if "wavepacket" in trig:
            trig["wavepacket"] = WavepacketConfig.from_dict(trig["wavepacket"], base)
        if "mode_match" in trig:
            trig["mode_match"] = _build(SpectrumTarget, trig["mode_match"], "mode_match")
        det = _build(DetectorConfig, d.get("detector"), "detector")
        fl = d.get("fluctuations")
        fl_cfg = None
        if fl is not None:
            fl_cfg = _build(FluctuationConfig, fl, "fluctuations")
        solver = d.get("solver", "auto")
        return cls(net, TriggerConfig(**trig), det, bool(d.get("uncertainty", True)), fl_cfg, sr_cfg, solver, base)


@dataclass(frozen=True)
class DesignConfig:
    """Design task.

    ``two_state_series``: ``omega1, omega2, gamma, Gamma``.
    ``perfect_transmission``: ``network`` (+ ``grid``).
    ``mode_match``: ``network`` and a ``target`` spectrum.
    """

    kind: str
    params: dict
    network: Optional[NetworkSpec] = None
    grid: GridConfig = field(default_factory=GridConfig)
    target: Optional[SpectrumTarget] = None
    solver: str = "auto"

    @classmethod
    def from_dict(cls, d: dict, base: Path) -> "DesignConfig":
        kind = d.get("kind")
        if kind == "two_state_series":
            need = ("omega1", "omega2", "gamma", "Gamma")
            missing = [k for k in need if k not in d]
            if missing:
                raise ConfigError("two-state design needs omega1, omega2, gamma, Gamma", missing=missing)
            unknown = sorted(set(d) - set(need) - {"kind", "grid"})
            if unknown:
                raise ConfigError("unknown keys in design config", keys=unknown)
            return cls(kind, {k: float(d[k]) for k in need}, grid=_build(GridConfig, d.get("grid"), "grid"))
        if kind in ("perfect_transmission", "mode_match"):
            allowed = {"kind", "network", "network_file", "grid", "target", "solver", "perfect_tol"}
            unknown = sorted(set(d) - allowed)
            if unknown:
                raise ConfigError("unknown keys in design config", keys=unknown)
            net = load_network(d, base)
            if net is None:
                raise ConfigError("design needs a network")
            tgt = _build(SpectrumTarget, d.get("target"), "target") if kind == "mode_match" else None
            return cls(
                kind,
                {"perfect_tol": float(d.get("perfect_tol", 1e-6))},
                net,
                _build(GridConfig, d.get("grid"), "grid"),
                tgt,
                d.get("solver", "auto"),
            )
        raise ConfigError("design kind must be two_state_series, perfect_transmission or mode_match", kind=kind)


@dataclass(frozen=True)
class RunConfig:
    """One invocation: command, parsed settings, output directory and overrides."""

    command: str
    settings: Any
    out: Path
    seed: int = 0
    grid_points: Optional[int] = None

    @classmethod
    def load(cls, command: str, path, out, seed: int = 0, grid_points: Optional[int] = None) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError("unknown command", command=command, allowed=list(COMMANDS))
        path = Path(path)
        data = load_json(path)
        base = path.parent
        parser = {
            "transmit": TransmitConfig,
            "wavepacket": WavepacketConfig,
            "amplify": AmplifyConfig,
            "povm": POVMConfig,
            "design": DesignConfig,
        }[command]
        try:
            settings = parser.from_dict(data, base)
        except PDKError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}", path=str(path)) from exc
        if grid_points is not None and grid_points < 8:
            raise ConfigError("--grid-points must be at least 8", grid_points=grid_points)
        return cls(command, settings, Path(out), int(seed), grid_points)


def load_schedule(path: Path):
    from .wavepacket import CouplingSchedule

    cols = read_csv(path)
    try:
        return CouplingSchedule.from_samples(cols["t"], cols["kappa"], cols["delta"])
    except KeyError as exc:
        raise ConfigError("schedule CSV needs columns t, kappa, delta", path=str(path)) from exc


def load_target_samples(path: Path):
    from .wavepacket import TargetWavepacket

    cols = read_csv(path)
    try:
        return TargetWavepacket.from_samples(cols["t"], cols["amplitude"], cols["phase"])
    except KeyError as exc:
        raise ConfigError("target CSV needs columns t, amplitude, phase", path=str(path)) from exc


def gaussian_spectrum(target: SpectrumTarget, points: Optional[int] = None):
    """Normalised Gaussian target spectrum on a uniform grid."""
    from .spectral import SpectralFunction

    n = int(points or target.points)
    grid = FrequencyGrid.uniform(target.center - target.span, target.center + target.span, n)
    w = grid.points
    f = np.exp(-((w - target.center) ** 2) / (4 * target.sigma_omega**2))
    return SpectralFunction(grid, f.astype(complex)).normalized()
