import json

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from sfwm_polent.analysis import (
    RHO_HH,
    RHO_VV,
    SWEEP_COLUMNS,
    SweepSettings,
    _simplex_grid,
    mixture_decompose,
    model_pure_state,
    width_sweep,
)
from sfwm_polent.errors import ConfigError
from sfwm_polent.fixtures import anchored_waveguide
from sfwm_polent.polarization import (
    bell_fidelities,
    bell_state,
    density_from_state,
    relative_phase,
    uhlmann_fidelity,
)

from conftest import random_density

PHI_PLUS = density_from_state(bell_state("+"))
FAST = SweepSettings(n_replicas=3)


def test_mixture_identity():
    dec = mixture_decompose(PHI_PLUS, PHI_PLUS)
    assert dec.probabilities == pytest.approx([1, 0, 0], abs=1e-6)
    assert dec.fidelity == pytest.approx(1, abs=1e-9)


def test_mixture_hh_observation():
    dec = mixture_decompose(RHO_HH, PHI_PLUS)
    assert np.argmax(dec.probabilities) == 1


def test_mixture_recovers_construction():
    dec = mixture_decompose(0.8 * PHI_PLUS + 0.1 * RHO_HH + 0.1 * RHO_VV, PHI_PLUS)
    assert dec.probabilities == pytest.approx([0.8, 0.1, 0.1], abs=1e-3)


@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.3, 0.95),
    st.floats(0.0, 1.0),
)
@settings(max_examples=20, deadline=None)
def test_mixture_construct_and_recover(seed, p0, split):
    rng = np.random.default_rng(seed)
    model = random_density(rng, rank=1)
    p = np.array([p0, (1 - p0) * split, (1 - p0) * (1 - split)])
    obs = p[0] * model + p[1] * RHO_HH + p[2] * RHO_VV
    dec = mixture_decompose(obs, model)
    assert dec.probabilities.sum() == pytest.approx(1, abs=1e-9)
    assert np.all(dec.probabilities >= 0)
    assert dec.probabilities == pytest.approx(p, abs=1e-3)


@given(st.integers(0, 2**32 - 1))
@example(24983)  # rank-deficient mixture sensitive to round-off in sqrt(sigma)
@settings(max_examples=10, deadline=None)
def test_mixture_beats_every_grid_point(seed):
    rng = np.random.default_rng(seed)
    obs, model = random_density(rng), random_density(rng, rank=1)
    dec = mixture_decompose(obs, model)
    comps = np.stack([model, RHO_HH, RHO_VV])
    grid_best = max(uhlmann_fidelity(obs, np.tensordot(p, comps, axes=1)) for p in _simplex_grid(0.05))
    assert dec.fidelity >= grid_best


def test_simplex_grid_size():
    g = _simplex_grid(0.05)
    assert len(g) == 231 and np.allclose(g.sum(axis=1), 1)


def test_model_pure_state_is_dominant_projector(prediction_700):
    m = model_pure_state(prediction_700.rho)
    assert np.trace(m @ m).real == pytest.approx(1)
    assert uhlmann_fidelity(prediction_700.rho, m) > 0.95


def test_bell_fidelity_examples():
    assert bell_fidelities(density_from_state(bell_state("-"))) == pytest.approx((0, 1))


def test_symmetric_family_sweep_is_factorizable():
    res = width_sweep("symmetric", [700, 1000, 1200], settings=FAST)
    assert np.all(res.column("c_pure") < 1e-6)
    assert np.all(res.column("r") == 1.0)


def test_anchored_sweep_shape():
    widths = [700, 800, 900, 1000, 1100, 1200]
    res = width_sweep("anchored", widths, rng_seed=2, settings=SweepSettings(n_replicas=5))
    c = res.column("c_pure")
    k = int(np.argmax(c))
    assert 0 < k < len(widths) - 1
    assert np.all(res.column("c_acs_mean") >= res.column("c_raw_mean"))
    assert list(res.widths) == widths


def test_noiseless_sweep_reproduces_prediction():
    res = width_sweep("anchored", [700, 1100], settings=SweepSettings(n_replicas=1, noiseless=True))
    for rec in res.records:
        assert rec.theta_rad == pytest.approx(relative_phase(rec.rho_pure), abs=1e-6)
        assert rec.c_acs_mean == pytest.approx(rec.c_pure, abs=1e-4)
        assert rec.c_acs_std == 0


def test_sweep_determinism_and_order(tmp_path):
    a = width_sweep("anchored", [1100, 700], rng_seed=9, settings=FAST)
    b = width_sweep("anchored", [700, 1100], rng_seed=9, settings=FAST)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == ",".join(SWEEP_COLUMNS)
    a.write_json(tmp_path / "a.json")
    data = json.loads((tmp_path / "a.json").read_text())
    assert [r["width_nm"] for r in data["records"]] == [700.0, 1100.0]


def test_sweep_input_errors():
    with pytest.raises(ConfigError):
        width_sweep("anchored", [], settings=FAST)
    with pytest.raises(ConfigError):
        width_sweep("nonexistent", [700], settings=FAST)
    with pytest.raises(ConfigError):
        SweepSettings(n_replicas=0)


def test_sweep_failures_are_annotated():
    with pytest.raises(ConfigError, match="width 650 nm"):
        width_sweep("anchored", [650, 700], settings=FAST)
    res = width_sweep("anchored", [650, 700], settings=FAST, fail_fast=False)
    assert len(res.records) == 1 and res.failures[0][0] == 650.0


def test_sweep_accepts_callable_family():
    res = width_sweep(lambda w: anchored_waveguide(w, length_m=3e-3), [800], settings=FAST)
    assert res.records[0].width_nm == 800
