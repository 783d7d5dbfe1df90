"""Relativistic Boltzmann collision machinery: kinematics, kernels, the
linearized operator and desk-scale decay experiments."""

from .crosssec import CrossSection, chi, sigma
from .grid import MomentumGrid
from .kinematics import energy, juttner, sqrt_juttner
from .weights import WeightSpec, weight

__version__ = "0.1.0"

__all__ = ["CrossSection", "MomentumGrid", "WeightSpec", "chi", "energy", "juttner", "sigma", "sqrt_juttner", "weight"]
