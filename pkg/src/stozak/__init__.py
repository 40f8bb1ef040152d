"""Pseudospectral toolkit for the 3D stochastic Zakharov system."""

from .grids import Grid, SpectralField

__all__ = ["Grid", "SpectralField"]
__version__ = "0.1.0"
