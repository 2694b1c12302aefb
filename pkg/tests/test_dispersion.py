import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm_polent.dispersion import (
    C_LIGHT,
    TabulatedDispersion,
    TaylorDispersion,
    dgi,
    group_index,
    gvd,
    nm_from_omega,
    omega_from_nm,
    phase_mismatch,
    read_dispersion_csv,
    tabulate,
    with_scaled_group_index_difference,
    write_dispersion_csv,
    zero_dispersion_wavelength,
)
from sfwm_polent.errors import ConfigError, NoRootError, OutOfWindowError
from sfwm_polent.fixtures import PUMP_NM, anchored_waveguide, fixture_dgi, symmetric_waveguide

W0 = float(omega_from_nm(PUMP_NM))


def test_wavelength_frequency_round_trip():
    lam = np.array([1400.0, 1554.9, 1700.0])
    assert np.allclose(nm_from_omega(omega_from_nm(lam)), lam, rtol=1e-14)


def test_taylor_derivatives_by_finite_difference():
    d = anchored_waveguide(900.0).te
    w = W0 * 1.01
    h = W0 * 1e-5
    assert d.dk(w) == pytest.approx((d.k(w + h) - d.k(w - h)) / (2 * h), rel=1e-7)
    assert d.d2k(w) == pytest.approx((d.dk(w + h) - d.dk(w - h)) / (2 * h), rel=1e-6)


def test_tabulated_matches_taylor():
    d = anchored_waveguide(700.0).te
    tab = tabulate(d, np.linspace(1400, 1700, 301))
    w = omega_from_nm(np.linspace(1450, 1650, 21))
    assert np.allclose(tab.k(w), d.k(w), rtol=1e-12)
    assert np.allclose(group_index(tab, w), group_index(d, w), rtol=1e-8)
    assert np.allclose(gvd(tab, w), gvd(d, w), rtol=1e-3, atol=1e-27)


def test_fixture_anchors():
    spec = anchored_waveguide(700.0)
    assert zero_dispersion_wavelength(spec.te, (1400, 1700)) == pytest.approx(1550.0, abs=0.01)
    assert dgi(spec, W0) == pytest.approx(0.097, abs=1e-12)
    assert dgi(anchored_waveguide(1200.0), W0) == pytest.approx(0.016, abs=1e-12)
    with pytest.raises(NoRootError):
        zero_dispersion_wavelength(spec.tm, (1400, 1700))


@given(st.floats(700, 1200))
@settings(max_examples=30, deadline=None)
def test_fixture_dgi_monotone_and_matches_model(width):
    spec = anchored_waveguide(width)
    assert dgi(spec, W0) == pytest.approx(fixture_dgi(width), abs=1e-12)
    assert fixture_dgi(width) >= fixture_dgi(min(width + 10, 1200))


def test_fixture_outside_family_is_config_error():
    with pytest.raises(ConfigError):
        anchored_waveguide(650.0)


def test_symmetric_fixture_has_identical_modes():
    spec = symmetric_waveguide(800.0)
    w = omega_from_nm(np.linspace(1450, 1650, 11))
    assert np.array_equal(spec.te.k(w), spec.tm.k(w))
    assert dgi(spec, W0) == 0


def test_zdw_bisection_on_known_root():
    # k2(w) = k3 (w - w_z) has its zero at 1500 nm
    wz = float(omega_from_nm(1500.0))
    d = TaylorDispersion("TE", W0, 3.0 * W0 / C_LIGHT, 3.4 / C_LIGHT, k2=1e-38 * (W0 - wz), k3=1e-38)
    assert zero_dispersion_wavelength(d, (1400, 1700), tol_nm=0.01) == pytest.approx(1500.0, abs=0.01)


def test_window_enforced():
    d = anchored_waveguide(700.0).te
    with pytest.raises(OutOfWindowError):
        d.k(omega_from_nm(1300.0))


def test_phase_mismatch_vanishes_at_degenerate_point():
    spec = anchored_waveguide(1000.0)
    assert phase_mismatch(spec, "HHHH", W0, W0, W0, W0) == pytest.approx(0, abs=1e-6)


def test_group_index_scaling():
    spec = anchored_waveguide(700.0)
    scaled = with_scaled_group_index_difference(spec, 10.0)
    assert dgi(scaled, W0) == pytest.approx(10 * dgi(spec, W0), rel=1e-9)
    assert scaled.tm == spec.tm
    assert scaled.te.k2 == spec.te.k2


def test_tabulated_validation():
    lam = np.linspace(1400, 1700, 60)
    with pytest.raises(ConfigError):
        TabulatedDispersion("TE", lam[:10], np.full(10, 2.0))
    with pytest.raises(ConfigError):
        TabulatedDispersion("TE", lam[::-1], np.full(60, 2.0))
    with pytest.raises(ConfigError):
        TabulatedDispersion("TE", lam, np.full(60, 0.9))


def test_csv_round_trip(tmp_path):
    spec = anchored_waveguide(800.0)
    lam = np.linspace(1400, 1700, 121)
    path = tmp_path / "neff.csv"
    write_dispersion_csv(path, spec, lam)
    back = read_dispersion_csv(path, 800.0)
    w = omega_from_nm([1500.0, 1554.9])
    assert np.allclose(group_index(back.te, w), group_index(spec.te, w), rtol=1e-7)
    assert dgi(back, W0) == pytest.approx(dgi(spec, W0), abs=1e-6)


def test_csv_errors_name_path_and_row(tmp_path):
    with pytest.raises(ConfigError, match="missing.csv"):
        read_dispersion_csv(tmp_path / "missing.csv", 700)
    bad = tmp_path / "bad.csv"
    bad.write_text("wavelength_nm,n_eff_te,n_eff_tm\n1400,2.0,2.0\n1401,x,2.0\n")
    with pytest.raises(ConfigError, match="row 3"):
        read_dispersion_csv(bad, 700)
    bad.write_text("lambda,te,tm\n")
    with pytest.raises(ConfigError, match="header"):
        read_dispersion_csv(bad, 700)
