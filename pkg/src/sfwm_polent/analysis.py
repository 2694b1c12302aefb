"""Studies built on the prediction and tomography chain.

* ``mixture_decompose`` fits ``p0 rho0 + p1 |HH><HH| + p2 |VV><VV|`` to an
  observed state by maximizing the Uhlmann fidelity on the probability simplex.
* ``width_sweep`` runs predict -> simulate -> reconstruct over a family of
  waveguide widths and aggregates seeded replicas per width.
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from .bpw import BPWSettings, FilterFunction, PumpSpectrum, predict
from .dispersion import WaveguideSpec, dgi
from .errors import ConfigError, NumericalError, PhaseUndefinedError
from .fixtures import FAMILIES
from .polarization import (
    bell_fidelities,
    concurrence,
    density_from_state,
    density_to_json,
    pure_state,
    relative_phase,
    state_metrics,
    uhlmann_fidelity,
    validate_density_matrix,
)
from .seeding import make_rng
from .tomography import ExperimentParams, mle_reconstruct, simulate_dataset

__all__ = [
    "MixtureDecomposition",
    "mixture_decompose",
    "model_pure_state",
    "bell_fidelities",
    "WidthRecord",
    "SweepResult",
    "width_sweep",
    "SWEEP_COLUMNS",
]

RHO_HH = density_from_state(pure_state(1.0, 0.0))
RHO_VV = density_from_state(pure_state(0.0, 1.0))


@dataclass(frozen=True)
class MixtureDecomposition:
    probabilities: np.ndarray
    fidelity: float
    rho_model: np.ndarray = field(repr=False)

    @property
    def p0(self) -> float:
        return float(self.probabilities[0])

    def mixture(self) -> np.ndarray:
        p0, p1, p2 = self.probabilities
        return p0 * self.rho_model + p1 * RHO_HH + p2 * RHO_VV


def model_pure_state(rho: np.ndarray) -> np.ndarray:
    """Projector on the dominant eigenvector of ``rho``."""
    w, v = np.linalg.eigh(validate_density_matrix(rho))
    return density_from_state(v[:, -1])


def _simplex_grid(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    pts = [(i, j, n - i - j) for i in range(n + 1) for j in range(n + 1 - i)]
    return np.array(pts, dtype=float) / n


def mixture_decompose(
    rho_obs: np.ndarray, rho_model: np.ndarray, grid_step: float = 0.05
) -> MixtureDecomposition:
    """Mixture probabilities maximizing F(rho_obs, p0 rho_model + p1 HH + p2 VV).

    A simplex grid at ``grid_step`` seeds an SLSQP refinement over (p1, p2);
    the refined point is kept only if it does not lower the fidelity.
    """
    rho_obs = validate_density_matrix(rho_obs)
    rho_model = validate_density_matrix(rho_model)
    comps = np.stack([rho_model, RHO_HH, RHO_VV])

    def fid(p):
        return uhlmann_fidelity(rho_obs, np.tensordot(p, comps, axes=1))

    grid = _simplex_grid(grid_step)
    vals = np.array([fid(p) for p in grid])
    best_p, best_f = grid[np.argmax(vals)], float(vals.max())

    def to_p(q):
        q = np.clip(q, 0.0, 1.0)
        return np.array([max(1.0 - q[0] - q[1], 0.0), q[0], q[1]])

    res = minimize(
        lambda q: -fid(to_p(q)),
        best_p[1:],
        method="SLSQP",
        bounds=[(0.0, 1.0), (0.0, 1.0)],
        constraints=[{"type": "ineq", "fun": lambda q: 1.0 - q[0] - q[1]}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    p = to_p(res.x)
    p /= p.sum()
    f = fid(p)
    if f >= best_f:
        best_p, best_f = p, f
    return MixtureDecomposition(best_p, best_f, rho_model)


# --- width sweep ---------------------------------------------------------

SWEEP_COLUMNS = (
    "width_nm",
    "dgi",
    "r",
    "c_pure",
    "c_raw_mean",
    "c_raw_std",
    "c_acs_mean",
    "c_acs_std",
    "s_mean",
    "s_std",
    "purity_mean",
    "theta_rad",
    "f_phi_plus",
    "f_phi_minus",
)


@dataclass(frozen=True)
class WidthRecord:
    """One sweep point.  S, purity, phase and fidelities refer to accidental-subtracted data."""

    width_nm: float
    dgi: float
    r: float
    c_pure: float
    c_raw_mean: float
    c_raw_std: float
    c_acs_mean: float
    c_acs_std: float
    s_mean: float
    s_std: float
    purity_mean: float
    theta_rad: float
    f_phi_plus: float
    f_phi_minus: float
    mixture: tuple[float, float, float]
    theta_pure: float
    n_replicas: int
    rho_pure: np.ndarray = field(repr=False, compare=False)

    def row(self) -> list[float]:
        return [getattr(self, k) for k in SWEEP_COLUMNS]


@dataclass(frozen=True)
class SweepResult:
    records: tuple[WidthRecord, ...]
    seed: int
    family: str
    failures: tuple[tuple[float, str], ...] = ()

    @property
    def widths(self) -> np.ndarray:
        return np.array([r.width_nm for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for rec in self.records:
                writer.writerow([_num(v) for v in rec.row()])

    def to_json(self) -> dict:
        recs = []
        for rec in self.records:
            d = {k: v for k, v in asdict(rec).items() if k != "rho_pure"}
            d = {k: (_clean(v) if isinstance(v, float) else v) for k, v in d.items()}
            d["mixture"] = [float(x) for x in rec.mixture]
            d["rho_pure"] = density_to_json(rec.rho_pure)
            recs.append(d)
        return {
            "family": self.family,
            "seed": self.seed,
            "records": recs,
            "failures": [{"width_nm": w, "error": m} for w, m in self.failures],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def _num(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else "nan"


def _clean(v: float):
    return float(v) if math.isfinite(v) else None


def _circmean(theta: np.ndarray) -> float:
    theta = theta[np.isfinite(theta)]
    if theta.size == 0:
        return float("nan")
    return float(stats.circmean(theta, high=np.pi, low=-np.pi))


@dataclass(frozen=True)
class SweepSettings:
    n_replicas: int = 25
    noiseless: bool = False
    n_grid: int = 64
    bpw: BPWSettings = BPWSettings()
    filter: FilterFunction = FilterFunction()
    pump: PumpSpectrum = PumpSpectrum()
    s_method: str = "horodecki"

    def __post_init__(self):
        if self.n_replicas < 1:
            raise ConfigError(f"n_replicas must be >= 1, got {self.n_replicas}")


def _sweep_width(
    width: float,
    family: Callable[[float], WaveguideSpec],
    params: ExperimentParams,
    seed: int,
    settings: SweepSettings,
) -> WidthRecord:
    spec = family(width)
    pred = predict(spec, settings.filter, settings.pump, settings.n_grid, settings.bpw)
    rho = pred.rho
    c_raw, c_acs, s, pur, th, fp, fm, rhos = [], [], [], [], [], [], [], []
    for k in range(settings.n_replicas):
        ds = simulate_dataset(rho, params, make_rng(seed, "sweep", float(width), k), poisson=not settings.noiseless)
        raw = mle_reconstruct(ds, use_accidental_subtraction=False)
        acs = mle_reconstruct(ds, use_accidental_subtraction=True)
        m = state_metrics(acs.rho, s_method=settings.s_method)
        c_raw.append(concurrence(raw.rho))
        c_acs.append(m["concurrence"])
        s.append(m["s"])
        pur.append(m["purity"])
        th.append(m["theta"])
        fp.append(m["f_phi_plus"])
        fm.append(m["f_phi_minus"])
        rhos.append(acs.rho)
    rho_mean = np.mean(rhos, axis=0)
    mix = mixture_decompose(rho_mean, model_pure_state(rho))
    try:
        theta_pure = relative_phase(rho)
    except PhaseUndefinedError:
        theta_pure = float("nan")

    def sd(x):
        return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0

    return WidthRecord(
        width_nm=float(width),
        dgi=float(dgi(spec, settings.pump.omega0)),
        r=float(pred.r),
        c_pure=concurrence(rho),
        c_raw_mean=float(np.mean(c_raw)),
        c_raw_std=sd(c_raw),
        c_acs_mean=float(np.mean(c_acs)),
        c_acs_std=sd(c_acs),
        s_mean=float(np.mean(s)),
        s_std=sd(s),
        purity_mean=float(np.mean(pur)),
        theta_rad=_circmean(np.array(th)),
        f_phi_plus=float(np.mean(fp)),
        f_phi_minus=float(np.mean(fm)),
        mixture=tuple(float(x) for x in mix.probabilities),
        theta_pure=theta_pure,
        n_replicas=settings.n_replicas,
        rho_pure=rho,
    )


def _guarded(width, **kw):
    try:
        return _sweep_width(width, **kw), None
    except (NumericalError, ConfigError, ValueError) as exc:
        return None, exc


def width_sweep(
    family: str | Callable[[float], WaveguideSpec],
    widths,
    params: ExperimentParams = ExperimentParams(),
    rng_seed: int = 0,
    settings: SweepSettings = SweepSettings(),
    executor=None,
    fail_fast: bool = True,
) -> SweepResult:
    """Predicted and simulated-tomography metrics for each width.

    ``family`` is a name in :data:`FAMILIES` or a callable ``width -> WaveguideSpec``.
    Replica ``k`` at width ``w`` draws from the stream ``(seed, "sweep", w, k)``.
    With ``fail_fast`` the first failure is raised, annotated with its width;
    otherwise failed widths are listed in ``SweepResult.failures``.
    """
    if isinstance(family, str):
        if family not in FAMILIES:
            raise ConfigError(f"unknown fixture family {family!r}; choose from {sorted(FAMILIES)}")
        name, fn = family, FAMILIES[family]
    else:
        name, fn = getattr(family, "__name__", "custom"), family
    widths = [float(w) for w in widths]
    if not widths:
        raise ConfigError("width list is empty")
    if len(set(widths)) != len(widths):
        raise ConfigError("widths must be unique")
    widths.sort()

    job = functools.partial(_guarded, family=fn, params=params, seed=rng_seed, settings=settings)
    mapper = executor.map if executor is not None else map
    records, failures = [], []
    for w, (rec, err) in zip(widths, mapper(job, widths)):
        if err is not None:
            if fail_fast:
                raise type(err)(f"width {w:g} nm: {err}") from err
            failures.append((w, f"{type(err).__name__}: {err}"))
        else:
            records.append(rec)
    return SweepResult(tuple(records), rng_seed, name, tuple(failures))

