"""Run every preset through the CLI and tabulate exit statuses.

Usage: python scripts/run_presets.py [OUT_DIR]
"""

import sys
import time
from pathlib import Path

from pdk.cli import COMMANDS, main

ROOT = Path(__file__).resolve().parents[1]
# presets that stop on purpose with an infeasibility error
EXPECTED_FAILURES = {"wavepacket_infeasible", "design_balanced_detuned", "design_band_gap"}


def run_all(out: Path) -> int:
    bad = 0
    for path in sorted((ROOT / "presets").glob("*.json")):
        command = path.stem.split("_")[0]
        if command not in COMMANDS:
            continue
        start = time.perf_counter()
        code = main([command, "--config", str(path), "--out", str(out / path.stem)])
        want = 3 if path.stem in EXPECTED_FAILURES else 0
        status = "ok" if code == want else "UNEXPECTED"
        bad += code != want
        print(f"{path.stem:28s} exit {code}  {time.perf_counter() - start:6.2f} s  {status}", flush=True)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(run_all(Path(sys.argv[1] if len(sys.argv) > 1 else "runs")))
