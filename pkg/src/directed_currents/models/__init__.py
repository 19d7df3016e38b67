"""
Models package - Geometry, boundary data, harmonic extension and the numerical checks.
"""

from .current_mass import MassReport, mass_bidisc, mass_scan
from .epsilon_profiles import (
    ConstantBoundaryData,
    EpsilonProfile,
    LogPowerProfile,
    PowerProfile,
    ProfileBoundaryData,
    TabulatedProfile,
)
from .geometry import Hyperbolicity, make_hyperbolicity
from .harmonic_extension import SectorField, poisson_extend
from .quadrature import QuadratureError, QuadratureSpec
from .run_config import RunConfig

__all__ = [
    'ConstantBoundaryData',
    'EpsilonProfile',
    'Hyperbolicity',
    'LogPowerProfile',
    'MassReport',
    'PowerProfile',
    'ProfileBoundaryData',
    'QuadratureError',
    'QuadratureSpec',
    'RunConfig',
    'SectorField',
    'TabulatedProfile',
    'make_hyperbolicity',
    'mass_bidisc',
    'mass_scan',
    'poisson_extend',
]
