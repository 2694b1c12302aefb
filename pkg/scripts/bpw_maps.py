"""Joint spectral intensity of the four polarization sectors at two widths.

Writes one CSV per width with |phi|^2 of every sector on the filter grid,
plus the 8 unfiltered process amplitudes on a grid 50% wider than the passbands.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from sfwm_polent.bpw import FilterFunction, FrequencyGrid, PumpSpectrum, compute_all_processes, predict
from sfwm_polent.dispersion import nm_from_omega
from sfwm_polent.fixtures import anchored_waveguide


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/bpw"))
    ap.add_argument("--widths", type=float, nargs="+", default=[700, 1100])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    filt = FilterFunction()

    for width in args.widths:
        spec = anchored_waveguide(width)
        pred = predict(spec)
        grid = pred.sectors["HH"].grid
        s_nm, i_nm = np.meshgrid(nm_from_omega(grid.omega_signal), nm_from_omega(grid.omega_idler), indexing="ij")
        with (args.out / f"sectors_w{width:g}.csv").open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["signal_nm", "idler_nm", "hh", "vh", "hv", "vv"])
            inten = [np.abs(pred.sectors[k].values.ravel()) ** 2 for k in ("HH", "VH", "HV", "VV")]
            for row in zip(s_nm.ravel(), i_nm.ravel(), *inten):
                wr.writerow([f"{v:.8g}" for v in row])

        wide = FrequencyGrid.for_filter(filt, 64, margin=0.25)
        procs = compute_all_processes(spec, PumpSpectrum(), wide)
        np.savez_compressed(
            args.out / f"processes_w{width:g}.npz",
            omega_signal=wide.omega_signal,
            omega_idler=wide.omega_idler,
            **{k: v.values for k, v in procs.items()},
        )
        norms = pred.sector_norms()
        print(f"{width:6g} nm  r = {pred.r:.4f}  " + "  ".join(f"{k}/HH {norms[k] / norms['HH']:.4f}" for k in ("VH", "HV")))


if __name__ == "__main__":
    main()
