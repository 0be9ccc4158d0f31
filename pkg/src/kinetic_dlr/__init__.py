"""Conservative macro-micro dynamical low-rank solver for the 1D1V Vlasov
equation with Dougherty collisions."""

__version__ = "0.1.0"

from .config import SimConfig, resolve_config
from .integrator import SimState, Stepper
from .lowrank import LowRankState
from .spatial import XGrid
from .velocity_fd import FdBackend
from .velocity_hermite import HermiteBackend

__all__ = [
    "SimConfig",
    "resolve_config",
    "SimState",
    "Stepper",
    "LowRankState",
    "XGrid",
    "FdBackend",
    "HermiteBackend",
    "__version__",
]
