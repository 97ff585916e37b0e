"""Few-photon scattering on waveguide-coupled emitters and the detectors built from it.

Units: hbar = c = 1 and the reference coupling rate Gamma = 1.
"""
from .errors import ConvergenceFailure, GridMismatch, InvalidArgument, WqedError
from .scattering import (
    EmitterParams,
    bound_norm2,
    bound_norm2_product,
    bound_term_apply,
    optical_theorem_defect,
    resolvent,
    scatter_one,
    scatter_two,
    transmission_amplitude,
)
from .wavepackets import (
    FrequencyGrid,
    GaussianPulseSpec,
    OnePhotonAmplitude,
    TwoPhotonAmplitude,
    build_grid,
    default_grid,
    gaussian_pulse,
    inner,
    monochromatic,
    norm2,
    product_two_photon,
)

__version__ = "0.1.0"
