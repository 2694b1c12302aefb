"""Polarization entanglement from orthogonally pumped SFWM in two-mode waveguides.

Modules, in pipeline order:

* :mod:`.dispersion` - TE/TM propagation constants, group index, GVD, ZDW, DGI
* :mod:`.bpw` - biphoton wavefunctions, pump balancing, predicted polarization state
* :mod:`.polarization` - two-qubit states and entanglement metrics
* :mod:`.tomography` - synthetic 36-setting counts, MLE reconstruction, Monte Carlo errors
* :mod:`.analysis` - mixture decomposition and width sweeps
* :mod:`.cli` - batch command-line front end
"""

from .bpw import FilterFunction, PumpSpectrum, predict
from .dispersion import WaveguideSpec
from .fixtures import anchored_waveguide, symmetric_waveguide
from .polarization import chsh_maximize, concurrence, horodecki_s, purity
from .tomography import ExperimentParams, mle_reconstruct, simulate_dataset

__version__ = "0.1.0"

__all__ = [
    "ExperimentParams",
    "FilterFunction",
    "PumpSpectrum",
    "WaveguideSpec",
    "anchored_waveguide",
    "chsh_maximize",
    "concurrence",
    "horodecki_s",
    "mle_reconstruct",
    "predict",
    "purity",
    "simulate_dataset",
    "symmetric_waveguide",
]
