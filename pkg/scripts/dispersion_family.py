"""Group index, GVD and DGI of the anchored width family (plot-ready CSV).

    python scripts/dispersion_family.py --out results/dispersion
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from sfwm_polent.dispersion import dgi, group_index, gvd, omega_from_nm, zero_dispersion_wavelength
from sfwm_polent.errors import NoRootError
from sfwm_polent.fixtures import PUMP_NM, anchored_waveguide


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/dispersion"))
    ap.add_argument("--widths", type=float, nargs="+", default=[700, 800, 900, 1000, 1100, 1200])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    lam = np.linspace(1400, 1700, 301)
    w = omega_from_nm(lam)
    w0 = float(omega_from_nm(PUMP_NM))
    summary = []
    for width in args.widths:
        spec = anchored_waveguide(width)
        with (args.out / f"gvd_w{width:g}.csv").open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["wavelength_nm", "k2_te_ps2_per_km", "k2_tm_ps2_per_km", "ng_te", "ng_tm"])
            for row in zip(lam, gvd(spec.te, w) * 1e27, gvd(spec.tm, w) * 1e27, group_index(spec.te, w), group_index(spec.tm, w)):
                wr.writerow([f"{v:.8g}" for v in row])
        try:
            zdw = zero_dispersion_wavelength(spec.te, (1400, 1700))
        except NoRootError:
            zdw = float("nan")
        summary.append((width, float(dgi(spec, w0)), zdw))

    with (args.out / "dgi_vs_width.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["width_nm", "dgi_pump", "zdw_te_nm"])
        wr.writerows(summary)
    for width, d, z in summary:
        zs = f"{z:.2f} nm" if z == z else "outside 1400-1700 nm"
        print(f"{width:6g} nm  DGI {d:.4f}  TE ZDW {zs}")


if __name__ == "__main__":
    main()
