"""Biphoton wavefunctions of the eight SFWM processes and the resulting polarization state.

For a process ``stuv`` (signal s, idler t, pump photons u and v) the amplitude
on a signal x idler frequency grid is

    phi(w1, w2) = int dw3 phi_u(w3) phi_v(w4) sinc(dk L/2) sqrt(w1 w2 w3 w4) exp(i Phi L/2)

with ``w4 = w1 + w2 - w3`` (energy conservation already integrated out) and
``dk`` the phase mismatch.  ``Phi`` is the summed propagation constant
``k_s1 + k_t2 + k_u3 + k_v4`` by default, which references every amplitude to
the output facet and therefore carries the group delay of each process.  The
alternative ``phase="mismatch"`` uses ``Phi = dk`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import WaveguideSpec, omega_from_nm
from .errors import ConfigError, NumericalError, OutOfWindowError, UnbalanceableError
from .polarization import BASIS

PROCESSES = ("HHHH", "HHVV", "VVVV", "VVHH", "HVHV", "HVVH", "VHHV", "VHVH")
SECTORS = {
    "HH": ("HHHH", "HHVV"),
    "VV": ("VVVV", "VVHH"),
    "HV": ("HVHV", "HVVH"),
    "VH": ("VHHV", "VHVH"),
}
PHASE_CONVENTIONS = ("propagation", "mismatch")


def _check_positive(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (np.isfinite(v) and v > 0):
            raise ConfigError(f"{type(obj).__name__}.{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class PumpSpectrum:
    """Rectangular pump spectrum, normalized so that int |phi|^2 dw = 1."""

    center_nm: float = 1554.90
    bandwidth_hz: float = 100e9

    def __post_init__(self):
        _check_positive(self, "center_nm", "bandwidth_hz")

    @property
    def omega0(self) -> float:
        return float(omega_from_nm(self.center_nm))

    @property
    def width(self) -> float:
        """Full angular-frequency width in rad/s."""
        return 2.0 * np.pi * self.bandwidth_hz

    @property
    def support(self) -> tuple[float, float]:
        return self.omega0 - self.width / 2, self.omega0 + self.width / 2

    def amplitude(self, omega):
        lo, hi = self.support
        w = np.asarray(omega, dtype=float)
        return np.where((w >= lo) & (w <= hi), 1.0 / np.sqrt(self.width), 0.0)


@dataclass(frozen=True)
class FilterFunction:
    """Separable 2-D rectangular passband on (signal, idler)."""

    signal_center_nm: float = 1533.47
    idler_center_nm: float = 1577.01
    bandwidth_hz: float = 100e9

    def __post_init__(self):
        _check_positive(self, "signal_center_nm", "idler_center_nm", "bandwidth_hz")

    @property
    def width(self) -> float:
        return 2.0 * np.pi * self.bandwidth_hz

    @property
    def signal_omega(self) -> float:
        return float(omega_from_nm(self.signal_center_nm))

    @property
    def idler_omega(self) -> float:
        return float(omega_from_nm(self.idler_center_nm))

    def passband(self, which: str) -> tuple[float, float]:
        c = self.signal_omega if which == "signal" else self.idler_omega
        return c - self.width / 2, c + self.width / 2

    def __call__(self, w1, w2):
        s0, s1 = self.passband("signal")
        i0, i1 = self.passband("idler")
        w1 = np.asarray(w1, dtype=float)[:, None]
        w2 = np.asarray(w2, dtype=float)[None, :]
        return (((w1 >= s0) & (w1 <= s1)) & ((w2 >= i0) & (w2 <= i1))).astype(float)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform midpoint grids over the signal and idler passbands.

    ``margin`` extends each axis beyond its passband by that fraction of the
    passband width on both sides (useful for plotting; outside points are
    zeroed by the filter).
    """

    omega_signal: np.ndarray
    omega_idler: np.ndarray

    @classmethod
    def for_filter(cls, filt: FilterFunction, n: int = 64, margin: float = 0.0) -> "FrequencyGrid":
        if n < 64:
            raise ConfigError(f"need at least 64 points per passband, got {n}")
        axes = []
        for which in ("signal", "idler"):
            lo, hi = filt.passband(which)
            h = (hi - lo) / n
            extra = int(round(margin * n))
            k = np.arange(-extra, n + extra)
            axes.append(lo + (k + 0.5) * h)
        return cls(*axes)

    @property
    def d_signal(self) -> float:
        return float(self.omega_signal[1] - self.omega_signal[0])

    @property
    def d_idler(self) -> float:
        return float(self.omega_idler[1] - self.omega_idler[0])

    @property
    def cell(self) -> float:
        return self.d_signal * self.d_idler


@dataclass(frozen=True)
class BiphotonAmplitude:
    grid: FrequencyGrid
    values: np.ndarray
    label: str = ""

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell)

    def inner(self, other: "BiphotonAmplitude") -> complex:
        """<self, other> = int conj(self) other."""
        return complex(np.vdot(self.values, other.values) * self.grid.cell)

    def scaled(self, factor: complex, label: str | None = None) -> "BiphotonAmplitude":
        return BiphotonAmplitude(self.grid, factor * self.values, self.label if label is None else label)


@dataclass(frozen=True)
class BPWSettings:
    n_pump: int = 128
    phase: str = "propagation"

    def __post_init__(self):
        if self.n_pump < 128:
            raise ConfigError(f"pump quadrature needs at least 128 points, got {self.n_pump}")
        if self.phase not in PHASE_CONVENTIONS:
            raise ConfigError(f"phase convention must be one of {PHASE_CONVENTIONS}")


def compute_process_bpw(
    spec: WaveguideSpec,
    process: str,
    pump: PumpSpectrum,
    grid: FrequencyGrid,
    settings: BPWSettings = BPWSettings(),
) -> BiphotonAmplitude:
    """Amplitude of one SFWM process on the grid (overall constant K = 1).

    The pump integral runs over the part of the pump band where both w3 and
    w4 = w1 + w2 - w3 lie inside the pump support, using midpoint quadrature
    with ``settings.n_pump`` nodes on that interval.
    """
    if process not in PROCESSES:
        raise ValueError(f"{process!r} is not one of the allowed processes {PROCESSES}")
    s, t, u, v = process
    ks, kt, ku, kv = (spec.mode(p) for p in process)

    lo_w, hi_w = spec.omega_window
    p0, p1 = pump.support
    if p0 < lo_w or p1 > hi_w:
        raise OutOfWindowError(
            f"pump band [{p0:.6e}, {p1:.6e}] rad/s leaves the dispersion window of "
            f"the {spec.width_nm:g} nm waveguide"
        )

    w1 = grid.omega_signal[:, None]
    w2 = grid.omega_idler[None, :]
    total = w1 + w2
    lo = np.maximum(p0, total - p1)
    hi = np.minimum(p1, total - p0)
    span = np.clip(hi - lo, 0.0, None)

    nodes = (np.arange(settings.n_pump) + 0.5) / settings.n_pump
    w3 = lo[..., None] + span[..., None] * nodes
    w4 = total[..., None] - w3
    # w3 and w4 stay inside the pump band, which was checked against the window
    w3 = np.clip(w3, p0, p1)
    w4 = np.clip(w4, p0, p1)

    k1 = ks.k(grid.omega_signal)[:, None, None]
    k2 = kt.k(grid.omega_idler)[None, :, None]
    k3 = ku.k(w3)
    k4 = kv.k(w4)
    dk = (k1 + k2) - (k3 + k4)
    half_l = spec.length_m / 2.0
    phase_arg = dk if settings.phase == "mismatch" else (k1 + k2) + (k3 + k4)

    integrand = (
        pump.amplitude(w3)
        * pump.amplitude(w4)
        * np.sinc(dk * half_l / np.pi)
        * np.sqrt(w1[..., None] * w2[..., None] * w3 * w4)
        * np.exp(1j * phase_arg * half_l)
    )
    values = integrand.sum(axis=-1) * (span / settings.n_pump)
    return BiphotonAmplitude(grid, values, process)


def compute_all_processes(
    spec: WaveguideSpec,
    pump: PumpSpectrum,
    grid: FrequencyGrid,
    settings: BPWSettings = BPWSettings(),
    executor=None,
) -> dict[str, BiphotonAmplitude]:
    """All eight process amplitudes; ``executor`` (a concurrent.futures executor) is optional."""
    if executor is None:
        return {p: compute_process_bpw(spec, p, pump, grid, settings) for p in PROCESSES}
    futures = {p: executor.submit(compute_process_bpw, spec, p, pump, grid, settings) for p in PROCESSES}
    return {p: futures[p].result() for p in PROCESSES}


def effective_sector_amplitudes(
    spec: WaveguideSpec,
    pumps: tuple[complex, complex],
    filt: FilterFunction,
    grid: FrequencyGrid,
    pump: PumpSpectrum = PumpSpectrum(),
    settings: BPWSettings = BPWSettings(),
    processes: dict[str, BiphotonAmplitude] | None = None,
) -> dict[str, BiphotonAmplitude]:
    """Filtered signal-idler sector amplitudes for pump amplitudes ``(alpha_H, alpha_V)``."""
    if processes is None:
        processes = compute_all_processes(spec, pump, grid, settings)
    ah, av = pumps
    f = filt(grid.omega_signal, grid.omega_idler)
    p = {k: b.values for k, b in processes.items()}
    raw = {
        "HH": ah * ah * p["HHHH"] + av * av * p["HHVV"],
        "VV": av * av * p["VVVV"] + ah * ah * p["VVHH"],
        "HV": ah * av * (p["HVHV"] + p["HVVH"]),
        "VH": ah * av * (p["VHHV"] + p["VHVH"]),
    }
    return {k: BiphotonAmplitude(grid, f * raw[k], k) for k in ("HH", "VH", "HV", "VV")}


def pumps_for_ratio(r: float) -> tuple[float, float]:
    """Unit-power pump amplitudes with alpha_V / alpha_H = r."""
    norm = np.sqrt(1.0 + r * r)
    return 1.0 / norm, r / norm


def balance_ratio(
    spec: WaveguideSpec,
    filt: FilterFunction,
    grid: FrequencyGrid,
    pump: PumpSpectrum = PumpSpectrum(),
    settings: BPWSettings = BPWSettings(),
    processes: dict[str, BiphotonAmplitude] | None = None,
    rtol: float = 1e-12,
    bracket: tuple[float, float] = (1e-3, 1e3),
) -> float:
    """Pump ratio r = alpha_V/alpha_H that equalizes the filtered HH and VV norms.

    Bisection in log r.  When the two norms are equal for every r (identical
    TE and TM dispersion) the symmetric answer r = 1 is returned.
    """
    if processes is None:
        processes = compute_all_processes(spec, pump, grid, settings)
    f = filt(grid.omega_signal, grid.omega_idler)
    hhhh, hhvv, vvvv, vvhh = (f * processes[k].values for k in ("HHHH", "HHVV", "VVVV", "VVHH"))
    if not np.any(vvvv) and not np.any(vvhh):
        raise UnbalanceableError("VV sector is identically zero on the filter window")
    if not np.any(hhhh) and not np.any(hhvv):
        raise UnbalanceableError("HH sector is identically zero on the filter window")

    def imbalance(log_r: float) -> float:
        # alpha_H = 1, alpha_V = r; the common power normalization cancels in the ratio
        r2 = np.exp(2.0 * log_r)
        nh = np.sum(np.abs(hhhh + r2 * hhvv) ** 2)
        nv = np.sum(np.abs(r2 * vvvv + vvhh) ** 2)
        return (nh - nv) / (nh + nv)

    if abs(imbalance(0.0)) <= rtol:
        return 1.0
    lo, hi = np.log(bracket[0]), np.log(bracket[1])
    flo, fhi = imbalance(lo), imbalance(hi)
    if np.sign(flo) == np.sign(fhi):
        raise UnbalanceableError(
            f"HH/VV imbalance keeps one sign for r in [{bracket[0]:g}, {bracket[1]:g}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = imbalance(mid)
        if abs(fm) <= rtol or hi - lo < 1e-15:
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return float(np.exp(mid))


def predicted_polarization_state(sectors: dict[str, BiphotonAmplitude]) -> np.ndarray:
    """Trace out the spectral degrees of freedom and normalize to unit trace."""
    grid = next(iter(sectors.values())).grid
    vecs = np.zeros((4, next(iter(sectors.values())).values.size), dtype=complex)
    for i, label in enumerate(BASIS):
        if label in sectors:
            vecs[i] = sectors[label].values.ravel()
    rho = (vecs @ vecs.conj().T) * grid.cell
    tr = np.real(np.trace(rho))
    if not tr > 0 or not np.isfinite(tr):
        raise NumericalError("all sector amplitudes vanish; no polarization state")
    rho = rho / tr
    return 0.5 * (rho + rho.conj().T)


@dataclass
class Prediction:
    """Everything derived from one waveguide at its balanced pump ratio."""

    spec: WaveguideSpec
    r: float
    sectors: dict[str, BiphotonAmplitude]
    rho: np.ndarray
    processes: dict[str, BiphotonAmplitude] = field(repr=False)

    def sector_norms(self) -> dict[str, float]:
        return {k: b.norm2() for k, b in self.sectors.items()}


def predict(
    spec: WaveguideSpec,
    filt: FilterFunction = FilterFunction(),
    pump: PumpSpectrum = PumpSpectrum(),
    n_grid: int = 64,
    settings: BPWSettings = BPWSettings(),
    r: float | None = None,
    executor=None,
) -> Prediction:
    """Balance the pumps (unless ``r`` is given) and reduce to the polarization state."""
    grid = FrequencyGrid.for_filter(filt, n_grid)
    processes = compute_all_processes(spec, pump, grid, settings, executor)
    if r is None:
        r = balance_ratio(spec, filt, grid, pump, settings, processes)
    sectors = effective_sector_amplitudes(
        spec, pumps_for_ratio(r), filt, grid, pump, settings, processes
    )
    return Prediction(spec, r, sectors, predicted_polarization_state(sectors), processes)
