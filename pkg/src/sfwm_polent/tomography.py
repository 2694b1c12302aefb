"""Synthetic 36-setting polarization tomography and maximum-likelihood reconstruction.

Counts follow ``N = R T p eta_s eta_i Tr[rho Pi_a (x) Pi_b]`` for the signal
setting ``a`` and idler setting ``b``.  Accidentals use the next-pulse model:
two independent singles streams of rates ``S_a`` and ``S_b`` coincide in the
same pulse slot with probability ``(S_a/R)(S_b/R)`` per pulse, i.e.
``S_a S_b T / R`` counts per setting.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from .errors import ConfigError, InsufficientCountsError, ReconstructionError
from .polarization import (
    LABELS,
    PAULI,
    density_to_json,
    projector,
    state_metrics,
    two_photon_operator,
    validate_density_matrix,
)
from .seeding import make_rng

SETTINGS: tuple[tuple[str, str], ...] = tuple(itertools.product(LABELS, LABELS))
DATASET_HEADER = (
    "signal_label",
    "idler_label",
    "coincidences",
    "accidentals",
    "singles_signal",
    "singles_idler",
)
METRICS = ("concurrence", "s", "purity", "theta", "f_phi_plus", "f_phi_minus")

_PROJ = np.stack([two_photon_operator(projector(a), projector(b)) for a, b in SETTINGS])
_PROJ_SIGNAL = {a: two_photon_operator(projector(a), np.eye(2)) for a in LABELS}
_PROJ_IDLER = {b: two_photon_operator(np.eye(2), projector(b)) for b in LABELS}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentParams:
    """Source and detection parameters of one tomography run.

    ``pair_rate`` is pairs per pump pulse inside the filter passbands.
    Efficiencies are end-to-end channel transmissions in dB (<= 0).
    """

    rep_rate_hz: float = 10e6
    pair_rate: float = 16.4e-3
    eta_signal_db: float = -20.0
    eta_idler_db: float = -18.0
    integration_s: float = 180.0
    dark_rate_hz: float = 0.0
    accidentals: bool = True

    def __post_init__(self):
        for name in ("rep_rate_hz", "pair_rate", "integration_s", "dark_rate_hz"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {v!r}")
        if not self.rep_rate_hz > 0:
            raise ConfigError("rep_rate_hz must be > 0")
        for name in ("eta_signal_db", "eta_idler_db"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v <= 0):
                raise ConfigError(f"{name} must be finite and <= 0 dB, got {v!r}")

    @property
    def eta_signal(self) -> float:
        return db_to_linear(self.eta_signal_db)

    @property
    def eta_idler(self) -> float:
        return db_to_linear(self.eta_idler_db)

    @property
    def pulses(self) -> float:
        return self.rep_rate_hz * self.integration_s


@dataclass(frozen=True)
class CountRecord:
    """Counts for one setting.  Singles are totals over the integration time.

    Simulated data hold integers; noiseless (expected-value) data hold floats.
    """

    signal_label: str
    idler_label: str
    coincidences: float
    accidentals: float = 0.0
    singles_signal: float = 0.0
    singles_idler: float = 0.0

    def __post_init__(self):
        if self.signal_label not in LABELS or self.idler_label not in LABELS:
            raise ValueError(f"unknown setting ({self.signal_label}, {self.idler_label})")
        for name in ("coincidences", "accidentals", "singles_signal", "singles_idler"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def setting(self) -> tuple[str, str]:
        return self.signal_label, self.idler_label


@dataclass(frozen=True)
class TomographyDataset:
    """All 36 settings; records are stored in :data:`SETTINGS` order."""

    records: tuple[CountRecord, ...]
    params: ExperimentParams | None = None

    def __post_init__(self):
        by_setting = {}
        for rec in self.records:
            if rec.setting in by_setting:
                raise ValueError(f"duplicate setting {rec.setting}")
            by_setting[rec.setting] = rec
        missing = [s for s in SETTINGS if s not in by_setting]
        if missing:
            raise ValueError(f"dataset incomplete, missing settings {missing}")
        object.__setattr__(self, "records", tuple(by_setting[s] for s in SETTINGS))

    @property
    def coincidences(self) -> np.ndarray:
        return np.array([r.coincidences for r in self.records], dtype=float)

    @property
    def accidentals(self) -> np.ndarray:
        return np.array([r.accidentals for r in self.records], dtype=float)

    def corrected_counts(self, use_accidental_subtraction: bool = True) -> np.ndarray:
        n = self.coincidences
        if use_accidental_subtraction:
            n = np.maximum(n - self.accidentals, 0.0)
        return n

    def with_counts(self, coincidences, accidentals) -> "TomographyDataset":
        recs = tuple(
            CountRecord(r.signal_label, r.idler_label, float(c), float(a), r.singles_signal, r.singles_idler)
            for r, c, a in zip(self.records, coincidences, accidentals)
        )
        return TomographyDataset(recs, self.params)


# --- forward model -------------------------------------------------------


def setting_operator(setting: tuple[str, str]) -> np.ndarray:
    return two_photon_operator(projector(setting[0]), projector(setting[1]))


def expected_coincidences(rho: np.ndarray, setting: tuple[str, str], params: ExperimentParams) -> float:
    """True (correlated) coincidences expected in one integration window."""
    rho = validate_density_matrix(rho)
    prob = float(np.real(np.vdot(setting_operator(setting).conj().T, rho)))
    scale = params.pulses * params.pair_rate * params.eta_signal * params.eta_idler
    return max(scale * prob, 0.0)


def singles_rates(rho: np.ndarray, setting: tuple[str, str], params: ExperimentParams) -> tuple[float, float]:
    """Signal and idler singles rates (Hz) behind the analyzers of ``setting``."""
    rho = validate_density_matrix(rho)
    pa = float(np.real(np.trace(_PROJ_SIGNAL[setting[0]] @ rho)))
    pb = float(np.real(np.trace(_PROJ_IDLER[setting[1]] @ rho)))
    base = params.rep_rate_hz * params.pair_rate
    return (
        base * params.eta_signal * max(pa, 0.0) + params.dark_rate_hz,
        base * params.eta_idler * max(pb, 0.0) + params.dark_rate_hz,
    )


def accidental_expectation(
    setting: tuple[str, str], params: ExperimentParams, singles: tuple[float, float]
) -> float:
    """Next-pulse accidentals ``S_a S_b T / R`` from singles rates in Hz."""
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    sa, sb = singles
    if sa < 0 or sb < 0:
        raise ValueError("singles rates must be >= 0")
    return sa * sb * params.integration_s / params.rep_rate_hz


def simulate_dataset(
    rho: np.ndarray, params: ExperimentParams, rng_seed=0, poisson: bool = True
) -> TomographyDataset:
    """Draw one 36-setting dataset.

    With ``poisson=False`` the records hold the expected values themselves.
    ``rng_seed`` is an int or a ``numpy.random.Generator``.
    """
    rho = validate_density_matrix(rho)
    rng = make_rng(rng_seed) if poisson else None
    records = []
    for setting in SETTINGS:
        true = expected_coincidences(rho, setting, params)
        sa, sb = singles_rates(rho, setting, params)
        acc = accidental_expectation(setting, params, (sa, sb)) if params.accidentals else 0.0
        mean = np.array([true + acc, acc, sa * params.integration_s, sb * params.integration_s])
        vals = rng.poisson(mean) if poisson else mean
        records.append(CountRecord(setting[0], setting[1], *(v.item() for v in vals)))
    return TomographyDataset(tuple(records), params)


# --- reconstruction ------------------------------------------------------

_TRIL = np.tril_indices(4)
_OFFDIAG = np.tril_indices(4, -1)
_GAUGE_WEIGHT = 1.0


@dataclass(frozen=True)
class ReconstructionResult:
    rho: np.ndarray
    scale: float
    neg_log_likelihood: float
    n_iter: int
    converged: bool
    message: str = ""


def _unpack(x: np.ndarray) -> tuple[np.ndarray, float]:
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = x[:4]
    t[_OFFDIAG] = x[4:10] + 1j * x[10:16]
    return t, x[16]


def _pack(t: np.ndarray, log_scale: float) -> np.ndarray:
    return np.concatenate([np.real(np.diag(t)), t[_OFFDIAG].real, t[_OFFDIAG].imag, [log_scale]])


def _objective(x: np.ndarray, n: np.ndarray) -> tuple[float, np.ndarray]:
    """Half Poisson deviance plus a gauge term fixing Tr T^dag T = 1."""
    t, log_s = _unpack(x)
    s = math.exp(log_s)
    g = t.conj().T @ t
    tr = float(np.real(np.trace(g)))
    p = np.real(np.einsum("jab,ba->j", _PROJ, g)) / tr
    m = np.maximum(s * p, 1e-300)
    pos = n > 0
    f = float(np.sum(m - n) + np.sum(n[pos] * np.log(n[pos] / m[pos])))
    f += _GAUGE_WEIGHT * (tr - 1.0) ** 2

    w = 1.0 - n / m
    big_g = np.einsum("j,jab->ab", w * s / tr, _PROJ - p[:, None, None] * np.eye(4))
    big_g += 2.0 * _GAUGE_WEIGHT * (tr - 1.0) * np.eye(4)
    a = t @ big_g
    grad = np.concatenate(
        [2 * np.real(np.diag(a)), 2 * a[_OFFDIAG].real, 2 * a[_OFFDIAG].imag, [float(np.sum(m - n))]]
    )
    return f, grad


_PAULI4 = [np.eye(2, dtype=complex), *PAULI]
_PAULI_BASIS = np.stack([two_photon_operator(a, b) for a in _PAULI4 for b in _PAULI4])
# counts model matrix: Tr[Pi_j B_k / 4]
_DESIGN = np.real(np.einsum("jab,kba->jk", _PROJ, _PAULI_BASIS)) / 4.0


def linear_inversion(counts: np.ndarray) -> np.ndarray:
    """Least-squares Pauli estimate; Hermitian, unit trace, possibly not PSD."""
    counts = np.asarray(counts, dtype=float)
    # each qubit's six projectors sum to 3 I, so Tr of all 36 sums to 9
    freq = counts * 9.0 / counts.sum()
    coef, *_ = np.linalg.lstsq(_DESIGN, freq, rcond=None)
    rho = np.einsum("k,kab->ab", coef, _PAULI_BASIS) / 4.0
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.real(np.trace(rho))


def _lower_factor(rho: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^dag T = rho (rho must be positive definite)."""
    j = np.eye(4)[::-1]
    low = np.linalg.cholesky(j @ rho @ j)
    return (j @ low @ j).conj().T


def _physical_start(rho: np.ndarray, mix: float = 1e-3) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    out = (v * w) @ v.conj().T
    return (1 - mix) * out + mix * np.eye(4) / 4


def mle_reconstruct(
    dataset: TomographyDataset,
    use_accidental_subtraction: bool = True,
    max_iter: int = 10_000,
    tol: float = 1e-9,
    min_counts: float = 1.0,
) -> ReconstructionResult:
    """Maximum-likelihood density matrix with a fitted overall count scale.

    ``rho = T^dag T / Tr(T^dag T)`` with lower-triangular ``T`` (16 real
    parameters) plus ``log(scale)`` are optimized with L-BFGS-B from the
    linear-inversion estimate.  Accidental subtraction clamps at zero.
    Convergence means the objective improved by less than ``tol`` over the
    last iteration; otherwise the best point is returned with
    ``converged=False``.
    """
    n = dataset.corrected_counts(use_accidental_subtraction)
    total = float(n.sum())
    if not total >= min_counts:
        raise InsufficientCountsError(
            f"insufficient counts for reconstruction: {total:g} total (need >= {min_counts:g})"
        )
    rho0 = _physical_start(linear_inversion(n))
    x0 = _pack(_lower_factor(rho0), math.log(total / 9.0))

    history = []
    res = minimize(
        _objective,
        x0,
        args=(n,),
        jac=True,
        method="L-BFGS-B",
        callback=lambda xk: history.append(_objective(xk, n)[0]),
        options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-10, "maxcor": 20},
    )
    if not np.all(np.isfinite(res.x)):
        raise ReconstructionError(f"likelihood optimizer diverged: {res.message}")
    small_step = len(history) >= 2 and abs(history[-2] - history[-1]) < tol
    converged = bool(res.success or small_step) and res.nit < max_iter
    t, log_s = _unpack(res.x)
    g = t.conj().T @ t
    tr = float(np.real(np.trace(g)))
    rho = validate_density_matrix(0.5 * (g + g.conj().T) / tr)
    return ReconstructionResult(
        rho=rho,
        scale=math.exp(log_s),
        neg_log_likelihood=float(res.fun),
        n_iter=int(res.nit),
        converged=converged,
        message=str(res.message),
    )


# --- Monte Carlo errors --------------------------------------------------


@dataclass(frozen=True)
class MonteCarloSummary:
    mean: dict[str, float]
    std: dict[str, float]
    n_instances: int
    n_skipped: int
    seed: int | None
    samples: np.ndarray = field(repr=False)


def _mc_instance(
    index: int,
    dataset: TomographyDataset,
    seed: int,
    use_accidental_subtraction: bool,
    poisson: bool,
    s_method: str,
) -> dict[str, float] | None:
    c, a = dataset.coincidences, dataset.accidentals
    if poisson:
        rng = make_rng(seed, "mc", index)
        c, a = rng.poisson(c).astype(float), rng.poisson(a).astype(float)
    try:
        res = mle_reconstruct(dataset.with_counts(c, a), use_accidental_subtraction)
    except (InsufficientCountsError, ReconstructionError):
        return None
    return state_metrics(res.rho, s_method=s_method)


def _circular(theta: np.ndarray) -> tuple[float, float]:
    theta = theta[np.isfinite(theta)]
    if theta.size == 0:
        return float("nan"), float("nan")
    mean = float(stats.circmean(theta, high=np.pi, low=-np.pi))
    if np.ptp(theta) == 0:
        return mean, 0.0
    return mean, float(stats.circstd(theta, high=np.pi, low=-np.pi))


def monte_carlo_errors(
    dataset: TomographyDataset,
    n_instances: int = 1000,
    rng_seed: int = 0,
    use_accidental_subtraction: bool = True,
    poisson: bool = True,
    s_method: str = "horodecki",
    max_skip_fraction: float = 0.05,
    executor=None,
) -> MonteCarloSummary:
    """Resample every count as Poisson(observed), reconstruct and summarize metrics.

    Instance ``i`` draws from the stream ``(rng_seed, "mc", i)`` so the result
    does not depend on scheduling.  ``theta`` uses circular statistics.
    """
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")
    job = functools.partial(
        _mc_instance,
        dataset=dataset,
        seed=rng_seed,
        use_accidental_subtraction=use_accidental_subtraction,
        poisson=poisson,
        s_method=s_method,
    )
    mapper = executor.map if executor is not None else map
    results = list(mapper(job, range(n_instances)))
    ok = [r for r in results if r is not None]
    skipped = n_instances - len(ok)
    if skipped > max_skip_fraction * n_instances or not ok:
        raise ReconstructionError(
            f"{skipped} of {n_instances} Monte Carlo reconstructions failed"
        )
    samples = np.array([[r[k] for k in METRICS] for r in ok])
    mean, std = {}, {}
    for i, k in enumerate(METRICS):
        if k == "theta":
            mean[k], std[k] = _circular(samples[:, i])
        else:
            x = samples[:, i]
            mean[k] = float(x.mean())
            # identical samples are reported with exactly zero spread
            std[k] = float(x.std(ddof=1)) if len(ok) > 1 and np.ptp(x) > 0 else 0.0
    return MonteCarloSummary(mean, std, n_instances, skipped, rng_seed, samples)


def reconstruction_report(
    result: ReconstructionResult,
    metrics: dict[str, float],
    mc: MonteCarloSummary | None = None,
    seed: int | None = None,
    use_accidental_subtraction: bool = True,
) -> dict:
    def clean(d):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}

    return {
        "density_matrix": density_to_json(result.rho),
        "metrics": clean(metrics),
        "monte_carlo_std": None if mc is None else clean(mc.std),
        "monte_carlo_mean": None if mc is None else clean(mc.mean),
        "monte_carlo_instances": None if mc is None else mc.n_instances,
        "monte_carlo_skipped": None if mc is None else mc.n_skipped,
        "seed": seed,
        "iterations": result.n_iter,
        "converged": result.converged,
        "scale": result.scale,
        "accidental_subtraction": use_accidental_subtraction,
    }


# --- CSV -----------------------------------------------------------------


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_dataset_csv(path: str | Path, dataset: TomographyDataset) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
        for r in dataset.records:
            writer.writerow(
                [r.signal_label, r.idler_label]
                + [_fmt(v) for v in (r.coincidences, r.accidentals, r.singles_signal, r.singles_idler)]
            )


def read_dataset_csv(path: str | Path, params: ExperimentParams | None = None) -> TomographyDataset:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"dataset file not found: {path}")
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_HEADER:
            raise ConfigError(f"{path}: header must be {','.join(DATASET_HEADER)}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(DATASET_HEADER):
                raise ConfigError(f"{path}: row {lineno}: expected {len(DATASET_HEADER)} fields")
            try:
                vals = [float(c) for c in row[2:]]
                records.append(CountRecord(row[0].strip(), row[1].strip(), *vals))
            except ValueError as exc:
                raise ConfigError(f"{path}: row {lineno}: {exc}") from None
    try:
        return TomographyDataset(tuple(records), params)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
