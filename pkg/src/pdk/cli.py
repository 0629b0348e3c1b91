"""Command line front-end: ``pdk <command> --config FILE --out DIR``.

Exit status 0 on success, 2 for configuration or parameter errors, 3 for
infeasible designs and 4 for numerical failures.  Errors are reported on
stderr as a JSON object ``{error, message, details}``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .amplification import AmplifierScheme, Kind, NumberStats, monte_carlo_ideal, output_variance, snr_sweep, thermal_occupation
from .config import (
    COMMANDS,
    AmplifyConfig,
    DesignConfig,
    POVMConfig,
    RunConfig,
    TargetConfig,
    TransmitConfig,
    WavepacketConfig,
    gaussian_spectrum,
    load_schedule,
    load_target_samples,
)
from .errors import ConfigError, CoverageError, PDKError, SpecError
from .io import dumps, write_csv, write_json
from .network import (
    NetworkSpec,
    TransferResult,
    design_two_state_series,
    find_perfect_transmission,
    series_spec,
    transfer_closed_form,
    transfer_direct,
)
from .povm import (
    ClickSet,
    DetectorSpec,
    FluctuationSpec,
    assemble_povm,
    entropic_uncertainty,
    fluctuate_povm,
    matching_fidelity,
    mode_matched_design,
    mode_overlap,
    super_resolution_estimate,
)
from .spectral import SpectralFunction, dispersion_metric, group_delay, spectral_bandwidth
from .wavepacket import (
    build_orthogonal_pulse,
    forward_amplitude,
    gaussian_kappa,
    gaussian_target,
    inverse_design,
    round_trip_error,
    trigger_spectrum,
)


# ---------------------------------------------------------------------------
# shared helpers


def solve_network(net: NetworkSpec, grid, solver: str = "auto") -> TransferResult:
    if solver == "direct":
        return transfer_direct(net, grid)
    if solver == "closed_form":
        return transfer_closed_form(net, grid)
    try:
        return transfer_closed_form(net, grid)
    except SpecError:
        return transfer_direct(net, grid)


def build_target(cfg: TargetConfig, base: Path):
    if cfg.kind == "gaussian":
        return gaussian_target(
            cfg.sigma, cfg.t0, cfg.omega0, n_sigma=cfg.n_sigma, points_per_sigma=cfg.points_per_sigma
        )
    if cfg.kind == "orthogonal":
        return build_orthogonal_pulse(
            cfg.sigma,
            cfg.z,
            cfg.s,
            t0=cfg.t0,
            omega0=cfg.omega0,
            n_sigma=cfg.n_sigma,
            points_per_sigma=cfg.points_per_sigma,
        )
    return load_target_samples(base / cfg.file)


def _complex_cols(values) -> list:
    v = np.asarray(values, dtype=complex)
    return [v.real, v.imag]


# ---------------------------------------------------------------------------
# commands


def run_transmit(rc: RunConfig) -> dict:
    cfg: TransmitConfig = rc.settings
    grid = cfg.grid.build(cfg.network, rc.grid_points)
    res = solve_network(cfg.network, grid, cfg.solver)
    w = grid.points
    gd = group_delay(res.T)
    peaks = find_perfect_transmission(res, cfg.perfect_tol)
    if cfg.window is not None:
        peaks = peaks[(peaks >= cfg.window[0]) & (peaks <= cfg.window[1])]
    notes = []
    try:
        bw = spectral_bandwidth(res.T)
    except CoverageError as exc:
        bw = None
        notes.append(f"bandwidth: {exc.message}")
    cols = [w, *_complex_cols(res.T.values), *_complex_cols(res.R.values), res.T.abs2(), gd.values]
    header = ["omega", "T_re", "T_im", "R_re", "R_im", "T_abs2", "group_delay"]
    if res.D is not None:
        cols.append(res.D.abs2())
        header.append("D_abs2")
    write_csv(rc.out / "spectrum.csv", header, cols)
    write_csv(rc.out / "perfect_transmission.csv", ["omega"], [peaks])
    summary = {
        "topology": cfg.network.topology.value,
        "states": len(cfg.network.states),
        "grid_points": len(grid),
        "bandwidth": bw,
        "dispersion": dispersion_metric(res.T),
        "flux_defect": res.flux_defect(),
        "perfect_transmission": peaks,
        "perfect_count": int(peaks.size),
        "notes": notes,
    }
    write_json(rc.out / "summary.json", summary)
    return summary


def run_wavepacket(rc: RunConfig) -> dict:
    cfg: WavepacketConfig = rc.settings
    target = build_target(cfg.target, cfg.base)
    T = cfg.detection.resolve(cfg.target)
    sched = inverse_design(target, T)
    amp = forward_amplitude(sched)
    t = sched.grid.points
    report = {
        "T": T,
        "t_start": sched.t_start,
        "weight": amp.weight,
        "round_trip_error": round_trip_error(target, sched),
        "warnings": list(sched.warnings),
    }
    tc = cfg.target
    if tc.kind == "gaussian":
        ref = gaussian_kappa(t, tc.sigma, tc.t0, T)
        report["kappa_max_relative_error"] = float(np.max(np.abs(sched.kappa.values - ref) / ref))
    if tc.kind == "orthogonal":
        g = gaussian_target(tc.sigma, tc.t0, tc.omega0, n_sigma=tc.n_sigma, points_per_sigma=tc.points_per_sigma)
        from .spectral import integrate

        ov = integrate(g.t, np.conj(g.psi_star().values) * target.psi_star().values)
        report["overlap_with_gaussian"] = float(abs(ov))
    write_csv(rc.out / "schedule.csv", ["t", "kappa", "delta"], [t, sched.kappa.values, sched.delta.values])
    n = t.size
    write_csv(
        rc.out / "amplitude.csv",
        ["t", "psi_re", "psi_im", "target_re", "target_im"],
        [t, *_complex_cols(amp.psi.values), *_complex_cols(np.conj(target.psi_star().values[:n]))],
    )
    write_json(rc.out / "report.json", report)
    return report


def run_amplify(rc: RunConfig) -> dict:
    cfg: AmplifyConfig = rc.settings
    rows = snr_sweep(cfg.G_values, cfg.n_a, cfg.delta_n_b, cfg.g)
    kinds = [k.value for k in Kind]
    by_g: dict = {}
    for r in rows:
        by_g.setdefault(r["G"], {})[r["scheme"]] = r
    gs = sorted(by_g)
    header = ["G"] + [f"snr_{k}" for k in kinds] + [f"var_{k}" for k in kinds]
    cols = [gs]
    for key in ("snr", "variance"):
        for k in kinds:
            cols.append([by_g[G][k][key] if k in by_g[G] else None for G in gs])
    write_csv(rc.out / "sweep.csv", header, cols)
    report = {"G_values": gs, "n_a": cfg.n_a, "delta_n_b": cfg.delta_n_b, "g": cfg.g}
    if cfg.monte_carlo is not None:
        mc = cfg.monte_carlo
        mrows = []
        for i, G in enumerate(mc.G_values):
            for j, kind in enumerate(k for k in Kind if not k.linear):
                try:
                    sch = AmplifierScheme(kind, G, g=cfg.g if kind.multi_step else None)
                except PDKError:
                    continue
                closed = output_variance(sch, NumberStats.fock(cfg.n_a), NumberStats.thermal(mc.n_bar))
                res = monte_carlo_ideal(sch, cfg.n_a, mc.n_bar, mc.samples, seed=[rc.seed, i, j])
                z = (res.stats.variance - closed) / res.variance_stderr if res.variance_stderr > 0 else 0.0
                mrows.append(
                    {
                        "G": sch.G,
                        "scheme": kind.value,
                        "closed_variance": closed,
                        "mc_variance": res.stats.variance,
                        "mc_stderr": res.variance_stderr,
                        "z": z,
                    }
                )
        hdr = ["G", "scheme", "closed_variance", "mc_variance", "mc_stderr", "z"]
        write_csv(rc.out / "monte_carlo.csv", hdr, [[r[h] for r in mrows] for h in hdr])
        report["monte_carlo_max_abs_z"] = max((abs(r["z"]) for r in mrows), default=0.0)
    write_json(rc.out / "report.json", report)
    return report


def _occupation(direct, kT, omega, hbar, what) -> float:
    if direct is not None:
        return float(direct)
    if kT <= 0:
        return 0.0
    if omega is None:
        raise ConfigError(f"{what} needs a mode frequency for a non-zero temperature")
    return thermal_occupation(omega, kT, hbar=hbar)


def _detector_spec(cfg: POVMConfig, rc: RunConfig) -> tuple[DetectorSpec, dict]:
    tc = cfg.trigger
    extra: dict = {}
    detection_time = 0.0
    auto_weight = 1.0
    if tc.mode_match is not None:
        f = gaussian_spectrum(tc.mode_match, rc.grid_points)
        T = np.ones(len(f.grid), complex) if cfg.network is None else solve_network(cfg.network, f.grid, cfg.solver).T.values
        Tf = SpectralFunction(f.grid, T)
        detection_time = tc.mode_match.detection_time
        psi = mode_matched_design(f, Tf, detection_time, floor=tc.mode_match.floor)
        extra["target"] = f
    else:
        if tc.wavepacket is not None:
            wp = tc.wavepacket
            sched = inverse_design(build_target(wp.target, cfg.base), wp.detection.resolve(wp.target))
        else:
            sched = load_schedule(cfg.base / tc.schedule_file)
        amp = forward_amplitude(sched)
        auto_weight = amp.weight
        psi = trigger_spectrum(amp, pad=tc.pad, center=tc.center)
    reflection = None
    if cfg.network is None:
        T = SpectralFunction(psi.grid, np.ones(len(psi.grid), complex))
        reflection = SpectralFunction(psi.grid, np.zeros(len(psi.grid), complex))
    else:
        res = solve_network(cfg.network, psi.grid, cfg.solver)
        if res.D is not None:
            raise SpecError("POVM assembly assumes a lossless filter (no side channels)")
        T, reflection = res.T, res.R
    d = cfg.detector
    clicks = ClickSet(values=tuple(d.clicks)) if d.clicks else ClickSet(d.k_min or 1)
    if d.trigger_weight == "auto":
        tw = auto_weight
    elif isinstance(d.trigger_weight, (int, float)):
        tw = float(d.trigger_weight)
    else:
        raise ConfigError("trigger_weight must be a number or 'auto'")
    spec = DetectorSpec(
        T,
        psi,
        eta=d.eta,
        G=d.G,
        clicks=clicks,
        n_bar=_occupation(d.n_bar, d.kT, d.omega_prime, d.hbar, "kT"),
        n_bar_prime=_occupation(d.n_bar_prime, d.kT_prime, d.omega_trigger, d.hbar, "kT_prime"),
        detection_time=detection_time,
        trigger_weight=tw,
        reflection=reflection,
    )
    return spec, extra


def run_povm(rc: RunConfig) -> dict:
    cfg: POVMConfig = rc.settings
    report: dict = {}
    if cfg.trigger is not None:
        spec, extra = _detector_spec(cfg, rc)
        el = assemble_povm(spec)
        report.update(el.to_dict())
        report["purity"] = el.purity
        report["trigger_weight"] = spec.trigger_weight
        report["n_bar"] = spec.n_bar
        report["n_bar_prime"] = spec.n_bar_prime
        if "target" in extra:
            report["matching_fidelity"] = matching_fidelity(el, extra["target"])
        if cfg.uncertainty:
            report.update(entropic_uncertainty(el).to_dict())
        w = spec.trigger.x
        write_csv(
            rc.out / "state.csv",
            ["omega", "state_re", "state_im", "trigger_re", "trigger_im", "T_re", "T_im"],
            [w, *_complex_cols(el.state.values), *_complex_cols(spec.trigger.values), *_complex_cols(spec.transmission.values)],
        )
        if cfg.fluctuations is not None:
            fl = FluctuationSpec(cfg.fluctuations.laws, cfg.fluctuations.samples)
            mixed = fluctuate_povm(spec, fl, seed=rc.seed, strict=cfg.fluctuations.strict)
            frep = mixed.to_dict()
            frep["mean_sample_trace"] = float(np.mean(mixed.sample_traces))
            frep["trace"] = mixed.trace
            if cfg.uncertainty:
                frep.update(entropic_uncertainty(mixed).to_dict())
            report["fluctuation"] = frep
            k = min(3, len(mixed.states))
            cols = [w]
            header = ["omega"]
            for i in range(k):
                cols += _complex_cols(mixed.states[i].values)
                header += [f"state{i}_re", f"state{i}_im"]
            write_csv(rc.out / "fluctuated_states.csv", header, cols)
    if cfg.super_resolution is not None:
        sr = cfg.super_resolution
        res = super_resolution_estimate(sr.epsilon, sr.eta, sr.trials, seed=rc.seed)
        report["super_resolution"] = {**res.to_dict(), "epsilon": sr.epsilon, "eta": sr.eta}
        print(f"epsilon_hat = {res.estimate:.6g} +- {res.stderr:.3g} (epsilon = {sr.epsilon:g})")
    write_json(rc.out / "povm.json", report)
    return report


def run_design(rc: RunConfig) -> dict:
    cfg: DesignConfig = rc.settings
    if cfg.kind == "two_state_series":
        p = cfg.params
        omega_star, g = design_two_state_series(p["omega1"], p["omega2"], p["gamma"], p["Gamma"])
        om = [p["omega1"], p["omega2"]]
        net = series_spec(om, p["gamma"], p["Gamma"], [g])
        res = solve_network(net, cfg.grid.build(net, rc.grid_points))
        t_star = res.evaluator(np.array([omega_star]))[0][0]
        out = {
            "kind": cfg.kind,
            "omega_star": omega_star,
            "g": g,
            "abs2_T_at_omega_star": float(abs(t_star) ** 2),
            "perfect_transmission": find_perfect_transmission(res),
            "network": net.to_dict(),
        }
    elif cfg.kind == "perfect_transmission":
        grid = cfg.grid.build(cfg.network, rc.grid_points)
        res = solve_network(cfg.network, grid, cfg.solver)
        peaks = find_perfect_transmission(res, cfg.params["perfect_tol"])
        out = {"kind": cfg.kind, "perfect_transmission": peaks, "count": int(peaks.size)}
    else:
        f = gaussian_spectrum(cfg.target, rc.grid_points)
        T = solve_network(cfg.network, f.grid, cfg.solver).T
        psi = mode_matched_design(f, T, cfg.target.detection_time, floor=cfg.target.floor)
        _, state, _ = mode_overlap(psi, T, detection_time=cfg.target.detection_time)
        from .povm import POVMElement

        fid = matching_fidelity(POVMElement(0.0, 1.0, state.normalized()), f)
        write_csv(rc.out / "trigger.csv", ["omega", "psi_re", "psi_im"], [psi.x, *_complex_cols(psi.values)])
        out = {"kind": cfg.kind, "matching_fidelity": fid, "detection_time": cfg.target.detection_time}
    write_json(rc.out / "design.json", out)
    return out


RUNNERS = {
    "transmit": run_transmit,
    "wavepacket": run_wavepacket,
    "amplify": run_amplify,
    "povm": run_povm,
    "design": run_design,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdk", description="Photodetector model: spectra, wavepackets, amplification and POVMs.")
    ap.add_argument("--version", action="version", version=f"pdk {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", required=True, help="output directory (created if missing)")
    ap.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    ap.add_argument("--grid-points", type=int, default=None, help="override the number of frequency grid points")
    return ap


def _fail(err: PDKError) -> int:
    sys.stderr.write(dumps(err.to_dict()))
    return err.exit_status


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = RunConfig.load(args.command, args.config, args.out, args.seed, args.grid_points)
        try:
            rc.out.mkdir(parents=True, exist_ok=True)
            probe = rc.out / ".pdk-write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError("output directory is not writable", path=str(rc.out), reason=str(exc)) from exc
        with np.errstate(all="ignore"):
            RUNNERS[rc.command](rc)
    except PDKError as err:
        return _fail(err)
    except np.linalg.LinAlgError as exc:
        return _fail(PDKError(f"linear algebra failure: {exc}"))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
