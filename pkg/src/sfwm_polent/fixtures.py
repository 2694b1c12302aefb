"""Synthetic width families of TE/TM dispersion for 700-1200 nm wide waveguides.

No modal data for the real devices is available, so ``anchored_waveguide``
builds Taylor models that satisfy the published anchors instead:

* DGI at the pump falls linearly from 0.097 (700 nm) to 0.016 (1200 nm),
* the TE zero-dispersion wavelength of the 700 nm guide is 1550 nm,
* TE GVD rises with width toward the TM value while TM stays normally
  dispersive and nearly width independent.

The GVD values put the balanced pump ratio near 1.33 (700 nm) and 1.14
(1200 nm).  ``symmetric_waveguide`` gives TE and TM identical dispersion.
"""

from __future__ import annotations

from .dispersion import C_LIGHT, TaylorDispersion, WaveguideSpec, omega_from_nm
from .errors import ConfigError

PUMP_NM = 1554.90
WIDTH_RANGE_NM = (700.0, 1200.0)

DGI_700 = 0.097
DGI_1200 = 0.016
TE_ZDW_700_NM = 1550.0
N_TE_700 = 3.10
N_TE_1200 = 3.20
N_TM = 3.02
NG_TM = 3.40
K2_TE_1200 = 2.0e-24  # s^2/m
K2_TM = 2.7e-24  # s^2/m
K3 = 1.0e-38  # s^3/m
WINDOW_NM = (1400.0, 1700.0)


def _fraction(width_nm: float) -> float:
    lo, hi = WIDTH_RANGE_NM
    if not lo <= width_nm <= hi:
        raise ConfigError(f"fixture family is defined on {lo:g}-{hi:g} nm, got {width_nm:g} nm")
    return (width_nm - lo) / (hi - lo)


def fixture_dgi(width_nm: float) -> float:
    u = _fraction(width_nm)
    return DGI_700 + (DGI_1200 - DGI_700) * u


def anchored_waveguide(width_nm: float, length_m: float = 4.5e-3) -> WaveguideSpec:
    u = _fraction(width_nm)
    w0 = float(omega_from_nm(PUMP_NM))
    # k2_TE(w) = k2 + k3 (w - w0) vanishes at the 700 nm ZDW
    k2_te_700 = -K3 * (float(omega_from_nm(TE_ZDW_700_NM)) - w0)
    te = TaylorDispersion(
        "TE",
        w0,
        k0=(N_TE_700 + (N_TE_1200 - N_TE_700) * u) * w0 / C_LIGHT,
        k1=(NG_TM + fixture_dgi(width_nm)) / C_LIGHT,
        k2=k2_te_700 + (K2_TE_1200 - k2_te_700) * u,
        k3=K3,
        window_nm=WINDOW_NM,
    )
    tm = TaylorDispersion(
        "TM", w0, k0=N_TM * w0 / C_LIGHT, k1=NG_TM / C_LIGHT, k2=K2_TM, k3=K3, window_nm=WINDOW_NM
    )
    return WaveguideSpec(float(width_nm), te, tm, length_m)


def symmetric_waveguide(width_nm: float, length_m: float = 4.5e-3) -> WaveguideSpec:
    """TE and TM copies of the same dispersion (square-core limit)."""
    tm = anchored_waveguide(width_nm, length_m).tm
    te = TaylorDispersion("TE", tm.omega0, tm.k0, tm.k1, tm.k2, tm.k3, tm.window_nm)
    return WaveguideSpec(float(width_nm), te, tm, length_m)


FAMILIES = {"anchored": anchored_waveguide, "symmetric": symmetric_waveguide}
