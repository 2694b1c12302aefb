"""Run configuration loaded from TOML.

Every table and key is optional; omitted values take the defaults below.
Unknown keys are rejected.  Layout::

    seed = 0
    out = "out"
    workers = 1

    [waveguide]
    family = "anchored"          # synthetic family: "anchored" or "symmetric"
    width_nm = 1100.0
    length_mm = 4.5
    dispersion_csv = ""          # optional; "{width}" is replaced by the width in nm
                                 # (formatted with :g), relative paths resolve
                                 # against the config file

    [waveguide.taylor]           # optional; replaces the family when present
    reference_nm = 1554.90
    window_nm = [1400.0, 1700.0]
    te = { n_eff = 3.1, n_group = 3.5, k2 = 0.0, k3 = 0.0 }   # k2 s^2/m, k3 s^3/m
    tm = { n_eff = 3.0, n_group = 3.4, k2 = 0.0, k3 = 0.0 }

    [pump]
    center_nm = 1554.90
    bandwidth_ghz = 100.0

    [filter]
    signal_center_nm = 1533.47
    idler_center_nm = 1577.01
    bandwidth_ghz = 100.0

    [grid]
    n = 64                       # points per axis of the signal/idler grid
    n_pump = 128                 # pump-frequency quadrature nodes
    phase = "propagation"        # or "mismatch"

    [experiment]
    rep_rate_hz = 10e6
    pair_rate = 16.4e-3          # pairs per pulse inside the filter passbands
    eta_signal_db = -20.0
    eta_idler_db = -18.0
    integration_s = 180.0
    dark_rate_hz = 0.0
    accidentals = true
    state = "predicted"          # or "phi_plus" / "phi_minus" to bypass the BPW model
    monte_carlo = 1000
    accidental_subtraction = true

    [dispersion]
    wavelength_min_nm = 1400.0
    wavelength_max_nm = 1700.0
    n_points = 301
    zdw_bracket_nm = [1400.0, 1700.0]

    [sweep]
    widths_nm = [700.0, 800.0, 900.0, 1000.0, 1100.0, 1200.0]
    replicas = 25
    noiseless = false
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bpw import PHASE_CONVENTIONS, BPWSettings, FilterFunction, PumpSpectrum
from .dispersion import C_LIGHT, TaylorDispersion, WaveguideSpec, omega_from_nm, read_dispersion_csv
from .errors import ConfigError
from .fixtures import FAMILIES
from .tomography import ExperimentParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STATES = ("predicted", "phi_plus", "phi_minus")


@dataclass(frozen=True)
class ModeTaylor:
    n_eff: float
    n_group: float
    k2: float = 0.0
    k3: float = 0.0


@dataclass(frozen=True)
class TaylorConfig:
    te: ModeTaylor
    tm: ModeTaylor
    reference_nm: float = 1554.90
    window_nm: tuple[float, float] = (1400.0, 1700.0)


@dataclass(frozen=True)
class WaveguideConfig:
    family: str = "anchored"
    width_nm: float = 1100.0
    length_mm: float = 4.5
    dispersion_csv: str = ""
    taylor: TaylorConfig | None = None


@dataclass(frozen=True)
class PumpConfig:
    center_nm: float = 1554.90
    bandwidth_ghz: float = 100.0


@dataclass(frozen=True)
class FilterConfig:
    signal_center_nm: float = 1533.47
    idler_center_nm: float = 1577.01
    bandwidth_ghz: float = 100.0


@dataclass(frozen=True)
class GridConfig:
    n: int = 64
    n_pump: int = 128
    phase: str = "propagation"


@dataclass(frozen=True)
class ExperimentConfig:
    rep_rate_hz: float = 10e6
    pair_rate: float = 16.4e-3
    eta_signal_db: float = -20.0
    eta_idler_db: float = -18.0
    integration_s: float = 180.0
    dark_rate_hz: float = 0.0
    accidentals: bool = True
    state: str = "predicted"
    monte_carlo: int = 1000
    accidental_subtraction: bool = True


@dataclass(frozen=True)
class DispersionReportConfig:
    wavelength_min_nm: float = 1400.0
    wavelength_max_nm: float = 1700.0
    n_points: int = 301
    zdw_bracket_nm: tuple[float, float] = (1400.0, 1700.0)


@dataclass(frozen=True)
class SweepConfig:
    widths_nm: tuple[float, ...] = (700.0, 800.0, 900.0, 1000.0, 1100.0, 1200.0)
    replicas: int = 25
    noiseless: bool = False


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "out"
    workers: int = 1
    waveguide: WaveguideConfig = WaveguideConfig()
    pump: PumpConfig = PumpConfig()
    filter: FilterConfig = FilterConfig()
    grid: GridConfig = GridConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    dispersion: DispersionReportConfig = DispersionReportConfig()
    sweep: SweepConfig = SweepConfig()
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.waveguide.family not in FAMILIES:
            raise ConfigError(
                f"waveguide.family must be one of {sorted(FAMILIES)}, got {self.waveguide.family!r}"
            )
        if self.grid.phase not in PHASE_CONVENTIONS:
            raise ConfigError(f"grid.phase must be one of {PHASE_CONVENTIONS}, got {self.grid.phase!r}")
        if self.experiment.state not in STATES:
            raise ConfigError(f"experiment.state must be one of {STATES}, got {self.experiment.state!r}")
        if self.experiment.monte_carlo < 0:
            raise ConfigError("experiment.monte_carlo must be >= 0")
        if self.dispersion.n_points < 2:
            raise ConfigError("dispersion.n_points must be >= 2")
        if self.sweep.replicas < 1:
            raise ConfigError("sweep.replicas must be >= 1")
        if not self.waveguide.length_mm > 0:
            raise ConfigError("waveguide.length_mm must be > 0")

    # builders for the numerical modules

    def pump_spectrum(self) -> PumpSpectrum:
        return PumpSpectrum(self.pump.center_nm, self.pump.bandwidth_ghz * 1e9)

    def filter_function(self) -> FilterFunction:
        f = self.filter
        return FilterFunction(f.signal_center_nm, f.idler_center_nm, f.bandwidth_ghz * 1e9)

    def bpw_settings(self) -> BPWSettings:
        return BPWSettings(n_pump=self.grid.n_pump, phase=self.grid.phase)

    def experiment_params(self) -> ExperimentParams:
        e = self.experiment
        return ExperimentParams(
            e.rep_rate_hz, e.pair_rate, e.eta_signal_db, e.eta_idler_db, e.integration_s, e.dark_rate_hz, e.accidentals
        )

    def waveguide_source(self) -> str:
        w = self.waveguide
        if w.taylor is not None:
            return "taylor"
        if w.dispersion_csv:
            return "csv"
        return w.family

    def waveguide_spec(self, width_nm: float) -> WaveguideSpec:
        w = self.waveguide
        length = w.length_mm * 1e-3
        if w.taylor is not None:
            return _taylor_spec(w.taylor, width_nm, length)
        if w.dispersion_csv:
            path = Path(w.dispersion_csv.replace("{width}", f"{width_nm:g}"))
            if not path.is_absolute():
                path = self.base_dir / path
            return read_dispersion_csv(path, width_nm, length)
        return FAMILIES[w.family](width_nm, length)


def _taylor_spec(t: TaylorConfig, width_nm: float, length_m: float) -> WaveguideSpec:
    w0 = float(omega_from_nm(t.reference_nm))

    def mode(name, m):
        return TaylorDispersion(
            name, w0, m.n_eff * w0 / C_LIGHT, m.n_group / C_LIGHT, m.k2, m.k3, tuple(t.window_nm)
        )

    return WaveguideSpec(float(width_nm), mode("TE", t.te), mode("TM", t.tm), length_m)


# --- loading -------------------------------------------------------------


def _convert(value, typ: str, where: str):
    base = typ.replace(" | None", "")
    if dataclasses.is_dataclass(_TYPES.get(base)):
        if not isinstance(value, dict):
            raise ConfigError(f"{where} must be a table")
        return _build(_TYPES[base], value, where)
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if base.startswith("tuple[float"):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{where} must be a list of numbers, got {value!r}")
        if base == "tuple[float, float]" and len(value) != 2:
            raise ConfigError(f"{where} must have exactly two entries")
        return tuple(float(v) for v in value)
    raise ConfigError(f"{where}: unsupported type {typ}")  # pragma: no cover


def _build(cls, table: dict, where: str = ""):
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name != "base_dir"}
    unknown = sorted(set(table) - set(fields))
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    kwargs = {}
    for name, value in table.items():
        key = f"{where}.{name}" if where else name
        kwargs[name] = _convert(value, fields[name].type, key)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


_TYPES = {
    c.__name__: c
    for c in (
        ModeTaylor,
        TaylorConfig,
        WaveguideConfig,
        PumpConfig,
        FilterConfig,
        GridConfig,
        ExperimentConfig,
        DispersionReportConfig,
        SweepConfig,
    )
}


def config_from_dict(table: dict, base_dir: Path | str = ".") -> RunConfig:
    cfg = _build(RunConfig, table)
    return dataclasses.replace(cfg, base_dir=Path(base_dir))


def load_config(path: str | Path | None) -> RunConfig:
    """Parse a TOML file; ``None`` gives the all-defaults configuration."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        table = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(table, path.parent)
