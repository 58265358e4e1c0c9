"""Asymptotic-expansion hierarchies for perturbed elliptic boundary value problems."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
