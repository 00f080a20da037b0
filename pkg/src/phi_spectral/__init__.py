"""Truncated Jacobi expansions of functions with algebraic singularities."""

from .jacobi_core import JacobiParams, jacobi_eval, jacobi_eval_all, jacobi_norm

__version__ = "0.1.0"

__all__ = ["JacobiParams", "jacobi_eval", "jacobi_eval_all", "jacobi_norm", "__version__"]
