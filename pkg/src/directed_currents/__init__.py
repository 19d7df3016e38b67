"""
Directed currents - Numerical experiments on directed harmonic currents near
a hyperbolic singularity of a holomorphic foliation in C^2.

This package follows Model-View-Controller (MVC) architecture:
- Models: Geometry of the leaf, boundary data, Poisson extension, mass and lemma checks
- Views: User interface and presentation (CLI, formatting, CSV/SVG/manifest artifacts)
- Controllers: Application logic coordination (experiments, worker pool, exit status)
"""

__version__ = "0.1.0"

from typing import Any, Dict, Optional

# Import main components for easy access
from .controllers.application_controller import ApplicationController
from .controllers.experiment_controller import ExperimentController
from .models.current_mass import MassReport, mass_bidisc, mass_scan
from .models.epsilon_profiles import ProfileBoundaryData, profile_from_spec
from .models.geometry import Hyperbolicity, make_hyperbolicity
from .models.harmonic_extension import SectorField, poisson_extend
from .models.quadrature import QuadratureError, QuadratureSpec
from .models.run_config import RunConfig
from .views.cli_view import CLIView

# Create default application controller instance
_default_app = ApplicationController()


def run_command(command: str, config: Optional[RunConfig] = None) -> Dict[str, Any]:
    """
    Run one experiment and write its artifacts and manifest.

    Args:
        command: leaf, extend, mass, lemmas, ddc or sharpness
        config: Run configuration (default configuration if None)

    Returns:
        Dict with flags, files, summary, manifest and optionally error

    Example:
        >>> result = run_command('leaf', RunConfig.build(leaf_grid=20, out='/tmp/run'))
        >>> result['flags']['leaf_in_bidisc']
        True
    """
    app = _default_app if config is None else ApplicationController(config)
    return app.execute(command)


def trace_mass(a: float, b: float, profile: str, delta: float, amplitude: float = 10.0) -> MassReport:
    """
    Trace mass on the bidisc of radius delta with default quadrature.

    Args:
        a: Real part of eta
        b: Imaginary part of eta (> 0)
        profile: Profile spec such as 'power:0.5' or 'log_power:1'
        delta: Bidisc radius in (0, 1)
        amplitude: Profile amplitude A

    Returns:
        MassReport: The mass with its error bound and ratios
    """
    h = make_hyperbolicity(a, b)
    ep = profile_from_spec(profile, amplitude)
    return mass_bidisc(h, ProfileBoundaryData(ep, h.gamma), ep, delta, QuadratureSpec())


# Export main components
__all__ = [
    'run_command',
    'trace_mass',
    'ApplicationController',
    'ExperimentController',
    'CLIView',
    'Hyperbolicity',
    'MassReport',
    'QuadratureError',
    'QuadratureSpec',
    'RunConfig',
    'SectorField',
    'make_hyperbolicity',
    'mass_bidisc',
    'mass_scan',
    'poisson_extend',
]
