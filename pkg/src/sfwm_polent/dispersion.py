"""TE/TM waveguide dispersion: propagation constants, group index, GVD, ZDW, DGI.

Two interchangeable representations are provided.  ``TaylorDispersion`` is a
cubic expansion of k(omega) about a reference frequency; ``TabulatedDispersion``
interpolates effective index against wavelength with a natural cubic spline
and converts to angular frequency on demand.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NoRootError, OutOfWindowError

C_LIGHT = 299_792_458.0  # m/s, exact


def omega_from_nm(wavelength_nm):
    return 2.0 * np.pi * C_LIGHT / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def nm_from_omega(omega):
    return 2.0 * np.pi * C_LIGHT / np.asarray(omega, dtype=float) * 1e9


def _check_window(omega, lo: float, hi: float, label: str) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    # a relative slack of 1e-12 keeps grid end points that round just outside
    slack = 1e-12 * hi
    if w.size and (np.min(w) < lo - slack or np.max(w) > hi + slack):
        raise OutOfWindowError(
            f"{label}: omega range [{np.min(w):.6e}, {np.max(w):.6e}] rad/s is outside "
            f"the validity window [{lo:.6e}, {hi:.6e}] rad/s"
        )
    return w


@dataclass(frozen=True)
class TaylorDispersion:
    """k(w) = k0 + k1 dw + k2 dw^2/2 + k3 dw^3/6 with dw = w - omega0.

    Units: omega0 rad/s, k0 rad/m, k1 s/m, k2 s^2/m, k3 s^3/m.
    """

    mode: str
    omega0: float
    k0: float
    k1: float
    k2: float = 0.0
    k3: float = 0.0
    window_nm: tuple[float, float] = (1400.0, 1700.0)

    def __post_init__(self):
        if self.mode not in ("TE", "TM"):
            raise ConfigError(f"mode must be 'TE' or 'TM', got {self.mode!r}")
        lo, hi = sorted(self.window_nm)
        if not lo > 0:
            raise ConfigError("validity window must be positive wavelengths")
        object.__setattr__(self, "window_nm", (float(lo), float(hi)))
        w = np.linspace(*self.omega_window, 257)
        n = self.k(w) * C_LIGHT / w
        if np.min(n) <= 1.0:
            raise ConfigError(f"{self.mode} effective index drops to {np.min(n):.4f} <= 1")

    @property
    def omega_window(self) -> tuple[float, float]:
        lo, hi = self.window_nm
        return float(omega_from_nm(hi)), float(omega_from_nm(lo))

    def _dw(self, omega):
        return _check_window(omega, *self.omega_window, self.mode) - self.omega0

    def k(self, omega):
        d = self._dw(omega)
        return self.k0 + d * (self.k1 + d * (self.k2 / 2.0 + d * self.k3 / 6.0))

    def dk(self, omega):
        d = self._dw(omega)
        return self.k1 + d * (self.k2 + d * self.k3 / 2.0)

    def d2k(self, omega):
        d = self._dw(omega)
        return self.k2 + self.k3 * d


@dataclass(frozen=True)
class TabulatedDispersion:
    """Effective index sampled on strictly increasing wavelengths (nm)."""

    mode: str
    wavelength_nm: np.ndarray
    n_eff: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in ("TE", "TM"):
            raise ConfigError(f"mode must be 'TE' or 'TM', got {self.mode!r}")
        lam = np.array(self.wavelength_nm, dtype=float)
        n = np.array(self.n_eff, dtype=float)
        if lam.ndim != 1 or lam.shape != n.shape:
            raise ConfigError("wavelength and index tables must be 1-D and equal length")
        if lam.size < 50:
            raise ConfigError(f"need at least 50 dispersion samples, got {lam.size}")
        if np.any(np.diff(lam) <= 0):
            raise ConfigError("wavelengths must be strictly increasing")
        if np.min(n) <= 1.0:
            raise ConfigError(f"{self.mode} effective index drops to {np.min(n):.4f} <= 1")
        lam.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "wavelength_nm", lam)
        object.__setattr__(self, "n_eff", n)
        object.__setattr__(self, "_spline", CubicSpline(lam, n, bc_type="natural"))

    def __eq__(self, other):
        if not isinstance(other, TabulatedDispersion):
            return NotImplemented
        return (
            self.mode == other.mode
            and np.array_equal(self.wavelength_nm, other.wavelength_nm)
            and np.array_equal(self.n_eff, other.n_eff)
        )

    __hash__ = None

    @property
    def window_nm(self) -> tuple[float, float]:
        return float(self.wavelength_nm[0]), float(self.wavelength_nm[-1])

    @property
    def omega_window(self) -> tuple[float, float]:
        lo, hi = self.window_nm
        return float(omega_from_nm(hi)), float(omega_from_nm(lo))

    def _lam(self, omega):
        w = _check_window(omega, *self.omega_window, self.mode)
        lam = nm_from_omega(w)
        lo, hi = self.window_nm
        return w, np.clip(lam, lo, hi)

    def k(self, omega):
        w, lam = self._lam(omega)
        return self._spline(lam) * w / C_LIGHT

    def dk(self, omega):
        _, lam = self._lam(omega)
        return (self._spline(lam) - lam * self._spline(lam, 1)) / C_LIGHT

    def d2k(self, omega):
        w, lam = self._lam(omega)
        return lam**2 * self._spline(lam, 2) / (w * C_LIGHT)


ModeDispersion = TaylorDispersion | TabulatedDispersion


def tabulate(d: ModeDispersion, wavelength_nm) -> TabulatedDispersion:
    """Sample any dispersion model into a table on the given wavelengths."""
    lam = np.asarray(wavelength_nm, dtype=float)
    w = omega_from_nm(lam)
    return TabulatedDispersion(d.mode, lam, d.k(w) * C_LIGHT / w)


@dataclass(frozen=True)
class WaveguideSpec:
    """A two-mode waveguide.  ``width_nm`` is only a label."""

    width_nm: float
    te: ModeDispersion
    tm: ModeDispersion
    length_m: float = 4.5e-3

    def __post_init__(self):
        if not self.length_m > 0:
            raise ConfigError(f"waveguide length must be positive, got {self.length_m}")
        if self.te.mode != "TE" or self.tm.mode != "TM":
            raise ConfigError("te/tm slots must hold TE and TM dispersion respectively")

    @property
    def omega_window(self) -> tuple[float, float]:
        a, b = self.te.omega_window, self.tm.omega_window
        return max(a[0], b[0]), min(a[1], b[1])

    def mode(self, polarization: str) -> ModeDispersion:
        if polarization == "H":
            return self.te
        if polarization == "V":
            return self.tm
        raise ValueError(f"waveguide modes are H (TE) or V (TM), got {polarization!r}")


def propagation_constant(d: ModeDispersion, omega):
    return d.k(omega)


def group_index(d: ModeDispersion, omega):
    return C_LIGHT * d.dk(omega)


def gvd(d: ModeDispersion, omega):
    """Group-velocity dispersion d^2k/domega^2 in s^2/m."""
    return d.d2k(omega)


def zero_dispersion_wavelength(
    d: ModeDispersion, bracket_nm: tuple[float, float], tol_nm: float = 0.01
) -> float:
    """Wavelength (nm) where the GVD changes sign, by bisection on the bracket."""
    lo, hi = sorted(bracket_nm)

    def f(lam):
        return float(d.d2k(omega_from_nm(lam)))

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoRootError(
            f"{d.mode} GVD does not change sign on [{lo:g}, {hi:g}] nm"
        )
    while hi - lo > tol_nm:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dgi(spec: WaveguideSpec, omega):
    """Differential group index |n_g,TE - n_g,TM|."""
    return np.abs(group_index(spec.te, omega) - group_index(spec.tm, omega))


def phase_mismatch(spec: WaveguideSpec, process: str, w1, w2, w3, w4):
    """k_s(w1) + k_t(w2) - k_u(w3) - k_v(w4) for the process letters ``stuv``."""
    s, t, u, v = _letters(process)
    return (
        spec.mode(s).k(w1) + spec.mode(t).k(w2) - spec.mode(u).k(w3) - spec.mode(v).k(w4)
    )


def _letters(process: str) -> str:
    if len(process) != 4 or any(c not in "HV" for c in process):
        raise ValueError(f"process must be four letters from {{H, V}}, got {process!r}")
    return process


def with_scaled_group_index_difference(spec: WaveguideSpec, factor: float) -> WaveguideSpec:
    """Rescale k1_TE - k1_TM by ``factor``, keeping TM and every other TE coefficient.

    Only defined for Taylor models sharing one reference frequency.
    """
    te, tm = spec.te, spec.tm
    if not (isinstance(te, TaylorDispersion) and isinstance(tm, TaylorDispersion)):
        raise TypeError("group-index scaling needs Taylor dispersion for both modes")
    if te.omega0 != tm.omega0:
        raise ValueError("TE and TM Taylor models must share omega0")
    return replace(spec, te=replace(te, k1=tm.k1 + factor * (te.k1 - tm.k1)))


# --- CSV ingestion -------------------------------------------------------

CSV_HEADER = ("wavelength_nm", "n_eff_te", "n_eff_tm")


def read_dispersion_csv(
    path: str | Path, width_nm: float, length_m: float = 4.5e-3
) -> WaveguideSpec:
    """Parse a ``wavelength_nm,n_eff_te,n_eff_tm`` file into a WaveguideSpec."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"dispersion file not found: {path}")
    lam, te, tm = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ConfigError(
                f"{path}: header must be {','.join(CSV_HEADER)}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}: row {lineno}: expected 3 fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ConfigError(f"{path}: row {lineno}: non-numeric value in {row!r}") from None
            if lam and vals[0] <= lam[-1]:
                raise ConfigError(f"{path}: row {lineno}: wavelengths must strictly increase")
            lam.append(vals[0])
            te.append(vals[1])
            tm.append(vals[2])
    try:
        return WaveguideSpec(
            width_nm,
            TabulatedDispersion("TE", np.array(lam), np.array(te)),
            TabulatedDispersion("TM", np.array(lam), np.array(tm)),
            length_m,
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def write_dispersion_csv(path: str | Path, spec: WaveguideSpec, wavelength_nm) -> None:
    lam = np.asarray(wavelength_nm, dtype=float)
    w = omega_from_nm(lam)
    n_te = spec.te.k(w) * C_LIGHT / w
    n_tm = spec.tm.k(w) * C_LIGHT / w
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in zip(lam, n_te, n_tm):
            writer.writerow([repr(float(x)) for x in row])
