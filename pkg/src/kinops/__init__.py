"""Boltzmann and Landau collision operators, anisotropic norms and a verification harness."""

from . import boltzmann, field, kernels, landau, norms, sphere
from .boltzmann import CollisionQuadConfig
from .field import GridSpec, VelocityField, maxwellian
from .kernels import KernelSpec

__all__ = ["boltzmann", "field", "kernels", "landau", "norms", "sphere", "CollisionQuadConfig",
           "GridSpec", "VelocityField", "maxwellian", "KernelSpec"]
__version__ = "0.1.0"
