"""Monte Carlo laboratory for random real algebraic hypersurfaces."""

from .ensembles import EnsembleSpec, RandomPoly, make_spec, sample
from .errors import ConfigError, DegenerateSampleError, TopologyError
from .harmonics import SpherePoint, build_basis, build_window
from .rng import trial_rng

__version__ = "0.1.0"

__all__ = [
    "EnsembleSpec",
    "RandomPoly",
    "make_spec",
    "sample",
    "SpherePoint",
    "build_basis",
    "build_window",
    "trial_rng",
    "ConfigError",
    "DegenerateSampleError",
    "TopologyError",
]
