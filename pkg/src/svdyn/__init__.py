"""Simulation and verification toolkit for set-valued dynamical systems."""
from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
