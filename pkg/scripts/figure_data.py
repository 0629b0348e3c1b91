"""Write the data behind the standard figures as CSV files.

* ``gaussian_couplings.csv``: decay rate and amplitude of the Gaussian
  detector for detection at 2 and 7 standard deviations.
* ``comb.csv``: ``|T|^2`` of a 70-state series chain.
* ``parallel_phase.csv``: unwrapped phase and group delay of five balanced
  parallel states.
* ``snr.csv``: SNR of the six amplification schemes against gain.

Usage: python scripts/figure_data.py [OUT_DIR]
"""

import sys
from pathlib import Path

import numpy as np

from pdk.amplification import snr_sweep
from pdk.io import write_csv, write_rows
from pdk.network import DiscreteState, parallel_spec, series_spec, transfer_closed_form
from pdk.spectral import FrequencyGrid, group_delay, unwrap_phase
from pdk.wavepacket import forward_amplitude, gaussian_target, inverse_design


def gaussian_couplings(out: Path) -> None:
    target = gaussian_target(1.0, points_per_sigma=64)
    cols, header = [], []
    for T in (2.0, 7.0):
        sched = inverse_design(target, T)
        amp = forward_amplitude(sched)
        n = len(sched.grid)
        pad = lambda v: np.concatenate([v, np.full(len(target.t) - n, np.nan)])  # noqa: E731
        cols += [pad(sched.kappa.values), pad(np.abs(amp.psi.values))]
        header += [f"kappa_T{T:g}", f"abs_psi_T{T:g}"]
        print(f"T = {T:g} sigma: weight {amp.weight:.12f}")
    write_csv(out / "gaussian_couplings.csv", ["t", "target_amplitude", *header], [target.t, target.amplitude.values, *cols])


def comb(out: Path) -> None:
    n, g = 70, 5.0
    res = transfer_closed_form(series_spec(np.zeros(n), 1.0, 1.0, np.full(n - 1, g)), FrequencyGrid.uniform(-12, 12, 24001))
    write_csv(out / "comb.csv", ["omega", "abs2_T"], [res.grid.points, res.T.abs2()])


def parallel_phase(out: Path) -> None:
    spec = parallel_spec(DiscreteState(w, 1.0, 1.0) for w in (-4.0, -2.0, 0.0, 2.0, 4.0))
    res = transfer_closed_form(spec, spec.adapted_grid(4001))
    up = unwrap_phase(res.T)
    tau = group_delay(res.T)
    write_csv(out / "parallel_phase.csv", ["omega", "abs2_T", "phase", "group_delay"], [res.grid.points, res.T.abs2(), up.phase, tau.values])


def snr(out: Path) -> None:
    rows = snr_sweep([2**k for k in range(1, 11)], 1, 1.0)
    write_rows(out / "snr.csv", ["scheme", "G", "g", "N", "variance", "snr"], rows)


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
    out.mkdir(parents=True, exist_ok=True)
    for job in (gaussian_couplings, comb, parallel_phase, snr):
        job(out)
    print(f"wrote {out}")
