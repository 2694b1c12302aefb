"""Predicted concurrence of the 700 nm guide as its DGI is scaled up."""

import argparse

import numpy as np

from sfwm_polent.bpw import BPWSettings, predict
from sfwm_polent.dispersion import dgi, with_scaled_group_index_difference
from sfwm_polent.fixtures import anchored_waveguide
from sfwm_polent.polarization import concurrence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--width", type=float, default=700.0)
    ap.add_argument("--factors", type=float, nargs="+", default=[1, 1.5, 2, 3, 5, 10])
    ap.add_argument("--phase", choices=["propagation", "mismatch"], default="propagation")
    args = ap.parse_args()
    base = anchored_waveguide(args.width)
    w0 = base.te.omega0
    for f in args.factors:
        spec = with_scaled_group_index_difference(base, f)
        pred = predict(spec, settings=BPWSettings(phase=args.phase))
        hh, vv = pred.sectors["HH"], pred.sectors["VV"]
        overlap = abs(hh.inner(vv)) / np.sqrt(hh.norm2() * vv.norm2())
        print(f"x{f:<5g} DGI {dgi(spec, w0):.4f}  C {concurrence(pred.rho):.4f}  |<HH|VV>| {overlap:.4f}")


if __name__ == "__main__":
    main()
