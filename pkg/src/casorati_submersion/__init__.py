"""Numerical checks of Casorati inequalities for Riemannian submersions.

The pipeline evaluates a chart-level submersion at a point: metric jets and
curvature (:mod:`geometry`), projectors, adapted frames and O'Neill tensors
(:mod:`submersion`), Casorati and δ-Casorati curvatures (:mod:`casorati`),
and the inequality right-hand sides with equality diagnostics
(:mod:`theorems`).  :mod:`fixtures` holds worked examples and :mod:`cli`
the ``casorati-check`` command.
"""

from __future__ import annotations

from .casorati import delta_casorati, scalar_curvatures
from .fixtures import catalog
from .submersion import SubmersionSpec, analyze
from .theorems import check_inequality, proof_polynomials

__version__ = "0.1.0"

__all__ = [
    "SubmersionSpec",
    "analyze",
    "scalar_curvatures",
    "delta_casorati",
    "check_inequality",
    "proof_polynomials",
    "catalog",
]
