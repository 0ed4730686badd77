"""Numerical checks for p-Laplacian spectra and submanifold geometry in hyperbolic space."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
