from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm_polent.errors import ConfigError, InsufficientCountsError
from sfwm_polent.polarization import (
    bell_state,
    concurrence,
    density_from_state,
    fidelity_to_pure,
    pure_state,
    purity,
    trace_distance,
)
from sfwm_polent.tomography import (
    SETTINGS,
    CountRecord,
    ExperimentParams,
    TomographyDataset,
    accidental_expectation,
    expected_coincidences,
    linear_inversion,
    mle_reconstruct,
    monte_carlo_errors,
    read_dataset_csv,
    simulate_dataset,
    singles_rates,
    write_dataset_csv,
)

from conftest import density_matrices, random_density

PHI_PLUS = density_from_state(bell_state("+"))
PARAMS = ExperimentParams()


def test_settings_complete():
    assert len(SETTINGS) == 36 and len(set(SETTINGS)) == 36


def test_expected_counts_examples():
    assert expected_coincidences(PHI_PLUS, ("H", "V"), PARAMS) == pytest.approx(0, abs=1e-9)
    hh = expected_coincidences(PHI_PLUS, ("H", "H"), PARAMS)
    assert hh == pytest.approx(10e6 * 180 * 16.4e-3 * 10**-2 * 10**-1.8 * 0.5, rel=1e-12)
    assert hh == pytest.approx(13.3 * 180, rel=0.05)
    full = 10e6 * 180 * 16.4e-3 * 10**-2 * 10**-1.8
    for s in [("D", "R"), ("V", "A"), ("L", "L")]:
        assert expected_coincidences(np.eye(4) / 4, s, PARAMS) == pytest.approx(full / 4, rel=1e-12)


def test_accidental_examples():
    assert accidental_expectation(("H", "H"), PARAMS, (0.0, 0.0)) == 0
    assert accidental_expectation(("H", "H"), PARAMS, (1000.0, 1000.0)) == pytest.approx(18.0)


def test_accidentals_scale_quadratically_with_pair_rate():
    doubled = replace(PARAMS, pair_rate=2 * PARAMS.pair_rate)
    s = ("H", "H")
    acc1 = accidental_expectation(s, PARAMS, singles_rates(PHI_PLUS, s, PARAMS))
    acc2 = accidental_expectation(s, doubled, singles_rates(PHI_PLUS, s, doubled))
    assert acc2 == pytest.approx(4 * acc1)
    assert expected_coincidences(PHI_PLUS, s, doubled) == pytest.approx(2 * expected_coincidences(PHI_PLUS, s, PARAMS))


def test_zero_pair_rate_gives_zero_dataset():
    ds = simulate_dataset(PHI_PLUS, replace(PARAMS, pair_rate=0.0), 1)
    assert not ds.coincidences.any() and not ds.accidentals.any()
    with pytest.raises(InsufficientCountsError, match="insufficient counts"):
        mle_reconstruct(ds)


def test_simulation_is_deterministic_and_unbiased():
    a, b = simulate_dataset(PHI_PLUS, PARAMS, 42), simulate_dataset(PHI_PLUS, PARAMS, 42)
    assert a == b
    assert simulate_dataset(PHI_PLUS, PARAMS, 43) != a
    rng = np.random.default_rng(0)
    hh = np.array([simulate_dataset(PHI_PLUS, PARAMS, rng).records[0].coincidences for _ in range(1000)])
    s = ("H", "H")
    mean = expected_coincidences(PHI_PLUS, s, PARAMS) + accidental_expectation(s, PARAMS, singles_rates(PHI_PLUS, s, PARAMS))
    assert abs(hh.mean() - mean) < 3 * np.sqrt(mean) / np.sqrt(1000)


def test_noiseless_reconstructions():
    ds = simulate_dataset(PHI_PLUS, PARAMS, poisson=False)
    assert fidelity_to_pure(mle_reconstruct(ds).rho, bell_state("+")) >= 0.9999
    ds = simulate_dataset(np.eye(4) / 4, PARAMS, poisson=False)
    assert purity(mle_reconstruct(ds).rho) == pytest.approx(0.25, abs=1e-4)


@given(density_matrices())
@settings(max_examples=20, deadline=None)
def test_exact_counts_round_trip(rho):
    ds = simulate_dataset(rho, PARAMS, poisson=False)
    res = mle_reconstruct(ds)
    assert res.converged
    assert trace_distance(res.rho, rho) < 1e-3


def test_linear_inversion_exact_on_expected_counts():
    rho = random_density(np.random.default_rng(5))
    ds = simulate_dataset(rho, replace(PARAMS, accidentals=False), poisson=False)
    assert np.allclose(linear_inversion(ds.coincidences), rho, atol=1e-12)


@given(st.lists(st.integers(0, 3000), min_size=36, max_size=36).filter(lambda c: sum(c) > 0))
@settings(max_examples=25, deadline=None)
def test_reconstruction_always_physical(counts):
    ds = TomographyDataset(tuple(CountRecord(a, b, float(n)) for (a, b), n in zip(SETTINGS, counts)))
    rho = mle_reconstruct(ds).rho
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-10


def test_poisson_phi_plus_with_subtraction():
    ds = simulate_dataset(PHI_PLUS, PARAMS, 11)
    assert concurrence(mle_reconstruct(ds, use_accidental_subtraction=True).rho) >= 0.95


def test_subtraction_raises_concurrence_in_expectation():
    # heavy uniform accidentals from a bright source
    noisy = replace(PARAMS, pair_rate=0.15)
    rho = density_from_state(pure_state(1.0, 0.8, 0.3))
    raw, acs = [], []
    for seed in range(8):
        ds = simulate_dataset(rho, noisy, seed)
        raw.append(concurrence(mle_reconstruct(ds, False).rho))
        acs.append(concurrence(mle_reconstruct(ds, True).rho))
    assert np.mean(acs) > np.mean(raw) + 0.01


def test_pipeline_unbiased_within_spread():
    rho = density_from_state(pure_state(1.0, 0.6))
    cs = [concurrence(mle_reconstruct(simulate_dataset(rho, PARAMS, s)).rho) for s in range(30)]
    assert abs(np.mean(cs) - concurrence(rho)) < 2 * np.std(cs, ddof=1)


def test_monte_carlo_scaling_and_determinism():
    rho = density_from_state(pure_state(1.0, 0.75))
    ds = simulate_dataset(rho, PARAMS, 3)
    mc1 = monte_carlo_errors(ds, 150, rng_seed=1)
    bright = ds.with_counts(ds.coincidences * 100, ds.accidentals * 100)
    mc100 = monte_carlo_errors(bright, 150, rng_seed=1)
    ratio = mc1.std["concurrence"] / mc100.std["concurrence"]
    assert 8 < ratio < 12.5
    with ThreadPoolExecutor(max_workers=3) as ex:
        mc_par = monte_carlo_errors(ds, 150, rng_seed=1, executor=ex)
    assert np.array_equal(mc_par.samples, mc1.samples)
    assert mc1.n_skipped == 0


def test_monte_carlo_without_resampling_has_zero_spread():
    ds = simulate_dataset(PHI_PLUS, PARAMS, 2)
    mc = monte_carlo_errors(ds, 5, poisson=False)
    assert all(mc.std[k] == 0 for k in ("concurrence", "s", "purity"))


def test_dataset_validation():
    recs = tuple(CountRecord(a, b, 1.0) for a, b in SETTINGS)
    with pytest.raises(ValueError, match="incomplete"):
        TomographyDataset(recs[:-1])
    with pytest.raises(ValueError, match="duplicate"):
        TomographyDataset(recs + recs[:1])
    with pytest.raises(ValueError):
        CountRecord("H", "H", -1.0)
    # records are reordered into the canonical order
    assert TomographyDataset(recs[::-1]).records == recs


def test_params_validation():
    with pytest.raises(ConfigError):
        ExperimentParams(eta_signal_db=1.0)
    with pytest.raises(ConfigError):
        ExperimentParams(pair_rate=-1.0)


def test_dataset_csv_round_trip(tmp_path):
    ds = simulate_dataset(PHI_PLUS, PARAMS, 8)
    path = tmp_path / "ds.csv"
    write_dataset_csv(path, ds)
    assert path.read_text().splitlines()[0] == (
        "signal_label,idler_label,coincidences,accidentals,singles_signal,singles_idler"
    )
    back = read_dataset_csv(path)
    assert back.records == ds.records
    ds_float = simulate_dataset(PHI_PLUS, PARAMS, poisson=False)
    write_dataset_csv(path, ds_float)
    assert read_dataset_csv(path).records == ds_float.records


def test_dataset_csv_errors(tmp_path):
    with pytest.raises(ConfigError, match="nothere.csv"):
        read_dataset_csv(tmp_path / "nothere.csv")
    p = tmp_path / "short.csv"
    p.write_text("signal_label,idler_label,coincidences,accidentals,singles_signal,singles_idler\nH,H,1,0,0,0\n")
    with pytest.raises(ConfigError, match="incomplete"):
        read_dataset_csv(p)
