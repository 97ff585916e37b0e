"""Time-domain ground truth for the frequency-domain scattering maps.

:mod:`wqed.oracle.lattice` integrates the waveguide-emitter dynamics directly and
never imports :mod:`wqed.scattering`; :mod:`wqed.oracle.validate` is the only
place the two meet.
"""
from .lattice import (
    LatticeConfig,
    TimeDomainResult,
    evolve_one_excitation,
    evolve_two_excitation,
    extract_momentum_amplitude,
    lattice_for_pulse,
)
from .validate import ValidationReport, validate_closed_form

__all__ = [
    "LatticeConfig",
    "TimeDomainResult",
    "evolve_one_excitation",
    "evolve_two_excitation",
    "extract_momentum_amplitude",
    "lattice_for_pulse",
    "ValidationReport",
    "validate_closed_form",
]
