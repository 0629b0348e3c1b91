import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from pdk.cli import main
from pdk.config import RunConfig
from pdk.errors import ConfigError, SpecError
from pdk.io import dumps, load_json, read_csv, write_csv

PRESETS = Path(__file__).resolve().parents[1] / "presets"


def run(command, preset, out, *extra):
    return main([command, "--config", str(PRESETS / preset), "--out", str(out), *extra])


def snapshot(folder):
    return {p.name: p.read_bytes() for p in sorted(Path(folder).iterdir())}


# ---------------------------------------------------------------- commands


def test_transmit(tmp_path):
    assert run("transmit", "transmit_simple.json", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["bandwidth"] == pytest.approx(1.0, rel=1e-6)
    assert summary["perfect_count"] == 1
    spec = read_csv(tmp_path / "spectrum.csv")
    assert np.all(np.diff(spec["omega"]) > 0)


def test_wavepacket(tmp_path):
    assert run("wavepacket", "wavepacket_gaussian_T2.json", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["weight"] == pytest.approx(0.97725, abs=1e-5)
    assert rep["kappa_max_relative_error"] < 1e-8


def test_amplify(tmp_path):
    assert run("amplify", "amplify_sweep.json", tmp_path) == 0
    sweep = read_csv(tmp_path / "sweep.csv")
    ratio = sweep["snr_SingleMode"] / sweep["snr_GModes"]
    assert np.allclose(ratio, np.sqrt(sweep["G"]), rtol=1e-14)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["monte_carlo_max_abs_z"] < 3


def test_povm_ideal(tmp_path):
    assert run("povm", "povm_ideal.json", tmp_path) == 0
    el = json.loads((tmp_path / "povm.json").read_text())
    assert el["w0"] == 0.0
    assert el["wT"] == pytest.approx(1.0, abs=1e-12)


def test_super_resolution_prints_estimate(tmp_path, capsys):
    assert run("povm", "povm_superres.json", tmp_path) == 0
    assert "epsilon_hat = " in capsys.readouterr().out


def test_design_two_state(tmp_path):
    assert run("design", "design_two_state.json", tmp_path) == 0
    d = json.loads((tmp_path / "design.json").read_text())
    assert d["abs2_T_at_omega_star"] == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- exit statuses


def test_band_gap_exit_status(tmp_path, capsys):
    assert run("design", "design_band_gap.json", tmp_path) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "band_gap"
    assert err["details"]["frequency"] == pytest.approx(-0.15, abs=1e-3)


def test_infeasible_window_exit_status(tmp_path, capsys):
    assert run("wavepacket", "wavepacket_infeasible.json", tmp_path) == 3
    assert "extends past T" in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    code = main(["transmit", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config not found" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = load_json(PRESETS / "transmit_simple.json")
    cfg["gird"] = {}
    cfg["network_file"] = str(PRESETS / "network_simple.json")
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["transmit", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("transmit", "transmit_simple.json", blocker / "sub") == 2


def test_invalid_command_and_version(capsys):
    with pytest.raises(SystemExit):
        main(["bogus", "--config", "x", "--out", "y"])
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "pdk" in capsys.readouterr().out


def test_grid_points_override(tmp_path):
    assert run("transmit", "transmit_simple.json", tmp_path, "--grid-points", "1001") == 0
    assert json.loads((tmp_path / "summary.json").read_text())["grid_points"] == 1001
    with pytest.raises(ConfigError):
        RunConfig.load("transmit", PRESETS / "transmit_simple.json", tmp_path, grid_points=4)


# ---------------------------------------------------------------- determinism


@pytest.mark.parametrize(
    "command,preset",
    [("amplify", "amplify_sweep.json"), ("povm", "povm_eta_fluctuation.json"), ("povm", "povm_superres.json")],
)
def test_seeded_runs_are_byte_identical(tmp_path, command, preset):
    assert run(command, preset, tmp_path / "a", "--seed", "11") == 0
    assert run(command, preset, tmp_path / "b", "--seed", "11") == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.setenv("PDK_THREADS", "1")
    assert run("povm", "povm_time_jitter.json", tmp_path / "a") == 0
    monkeypatch.setenv("PDK_THREADS", "3")
    assert run("povm", "povm_time_jitter.json", tmp_path / "b") == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_relative_network_file(tmp_path):
    for name in ("transmit_simple.json", "network_simple.json"):
        shutil.copy(PRESETS / name, tmp_path / name)
    assert main(["transmit", "--config", str(tmp_path / "transmit_simple.json"), "--out", str(tmp_path / "o")]) == 0


def test_inline_network_errors(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"network": {"topology": "simple", "states": []}}))
    with pytest.raises(SpecError):
        RunConfig.load("transmit", path, tmp_path)


# ---------------------------------------------------------------- io


def test_csv_round_trip(tmp_path):
    x = np.array([0.1, 1 / 3, -2e-300])
    write_csv(tmp_path / "a.csv", ["x", "y"], [x, 2 * x])
    back = read_csv(tmp_path / "a.csv")
    assert np.array_equal(back["x"], x) and np.array_equal(back["y"], 2 * x)


def test_json_is_sorted_and_finite():
    text = dumps({"b": np.float64(np.inf), "a": np.int64(3), "c": (np.bool_(True),)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 3, "b": "inf", "c": [True]}


def test_malformed_files(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_json(tmp_path / "bad.json")
    (tmp_path / "list.json").write_text("[]")
    with pytest.raises(ConfigError):
        load_json(tmp_path / "list.json")
    (tmp_path / "bad.csv").write_text("a,b\n1,x\n")
    with pytest.raises(ConfigError):
        read_csv(tmp_path / "bad.csv")
