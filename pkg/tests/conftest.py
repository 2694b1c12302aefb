import numpy as np
import pytest
from hypothesis import strategies as st

from sfwm_polent.fixtures import anchored_waveguide
from sfwm_polent.bpw import predict


def random_density(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@st.composite
def density_matrices(draw, min_rank=1, max_rank=4):
    seed = draw(st.integers(0, 2**32 - 1))
    rank = draw(st.integers(min_rank, max_rank))
    return random_density(np.random.default_rng(seed), rank)


@pytest.fixture(scope="session")
def prediction_700():
    return predict(anchored_waveguide(700.0))


@pytest.fixture(scope="session")
def prediction_1100():
    return predict(anchored_waveguide(1100.0))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
