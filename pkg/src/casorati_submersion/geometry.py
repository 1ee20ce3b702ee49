"""Metric evaluation, Levi-Civita connection and Riemann curvature at a point.

Curvature sign convention: ``R(X, Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`` and
``R(X, Y, Z, W) = g(R(X, Y)Z, W)``.  With this choice the round sphere of
radius 1 has ``R(e1, e2, e2, e1) = 1`` and a constant-curvature model reads
``R(Z1, Z2)Z3 = c (g(Z2, Z3) Z1 − g(Z1, Z3) Z2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from . import numkit
from .numkit import Jet2

__all__ = [
    "SingularMetricError",
    "MetricField",
    "CurvaturePack",
    "christoffel",
    "riemann",
    "curvature_from_metric_jet",
    "sectional",
    "scalar_curvature",
    "metric_compatibility_residual",
    "symmetry_residual",
    "bianchi_residual",
]


class SingularMetricError(np.linalg.LinAlgError):
    pass


class MetricField:
    """Symmetric matrix of expressions over a coordinate list.

    Only the upper triangle is stored.  Entries that are missing from the
    input mapping are zero.  Identical entry texts share one compiled
    evaluator.
    """

    def __init__(self, coords: Sequence[str], entries: Mapping[tuple[int, int], ex.Expr | str]):
        self.coords = tuple(coords)
        n = len(self.coords)
        upper: dict[tuple[int, int], ex.Expr] = {}
        for (i, j), e in entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise IndexError(f"metric index ({i}, {j}) out of range for dimension {n}")
            a, b = min(i, j), max(i, j)
            if (a, b) in upper:
                raise ValueError(f"metric entry ({a}, {b}) given twice")
            upper[(a, b)] = ex.parse(e) if isinstance(e, str) else e
        self.entries = upper
        cache: dict[ex.Expr, object] = {}
        self._compiled = {}
        for key, e in upper.items():
            if e not in cache:
                cache[e] = ex.compile_expr(e, self.coords)
            self._compiled[key] = cache[e]

    @property
    def n(self) -> int:
        return len(self.coords)

    @classmethod
    def diagonal(cls, coords: Sequence[str], diag: Sequence[str]) -> "MetricField":
        return cls(coords, {(i, i): d for i, d in enumerate(diag)})

    def evaluate(self, values: Sequence):
        """Metric matrix at ``values`` (floats give an ndarray, jets give a Jet2)."""
        n = self.n
        jets = [v for v in values if isinstance(v, Jet2)]
        if not jets:
            m = np.zeros((n, n))
            for (i, j), f in self._compiled.items():
                m[i, j] = m[j, i] = float(f(values))
            return m
        nv, order = jets[0].n, min(j.order for j in jets)
        zero = numkit.constant(0.0, nv, order)
        rows = [[zero] * n for _ in range(n)]
        for (i, j), f in self._compiled.items():
            v = f(values)
            if not isinstance(v, Jet2):
                v = numkit.constant(v, nv, order)
            rows[i][j] = rows[j][i] = v
        return numkit.stack([numkit.stack(r) for r in rows])

    def at(self, point: Sequence[float]) -> Jet2:
        """Order-2 jet of the metric, seeded in all coordinates."""
        x = numkit.seed(point)
        g = self.evaluate([x[i] for i in range(self.n)])
        numkit.SymMatrix(g.value).require_positive_definite()
        return g


@dataclass
class CurvaturePack:
    point: np.ndarray
    metric: Jet2  # order 2
    metric_inv: Jet2  # order 2
    gamma: Jet2  # Γ[k, i, j] = Γ^k_ij, order 1
    riemann_up: np.ndarray  # Rup[i, j, k, p]: R(∂i, ∂j)∂k = Rup[i,j,k,p] ∂p
    riemann: np.ndarray  # R[i, j, k, l] = g(R(∂i, ∂j)∂k, ∂l)

    @property
    def g(self) -> np.ndarray:
        return self.metric.value

    @property
    def ginv(self) -> np.ndarray:
        return self.metric_inv.value

    @cached_property
    def scalar(self) -> float:
        """``2τ = Σ_{i,j} R(e_i, e_j, e_j, e_i)`` for any orthonormal frame."""
        return scalar_curvature(self.riemann, self.ginv)


def curvature_from_metric_jet(g: Jet2, point: Sequence[float] | None = None) -> CurvaturePack:
    """Christoffel symbols and Riemann tensor from an order-2 metric jet."""
    if g.order != 2:
        raise ValueError("curvature needs an order-2 metric jet")
    try:
        ginv = numkit.inverse(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is singular") from exc
    dg = g.derivative()  # value[i, j, k] = ∂_k g_ij
    # first kind: Γ_{l i j} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    first = (numkit.contract("jli->lij", dg) + numkit.contract("ilj->lij", dg) - numkit.contract("ijl->lij", dg)) * 0.5
    gamma = numkit.contract("kl,lij->kij", ginv.truncate(), first)
    gv, dgam = gamma.value, gamma.grad  # dgam[k, i, j, m] = ∂_m Γ^k_ij
    rup = (
        np.einsum("pjki->ijkp", dgam)
        - np.einsum("pikj->ijkp", dgam)
        + np.einsum("mjk,pim->ijkp", gv, gv)
        - np.einsum("mik,pjm->ijkp", gv, gv)
    )
    rlow = np.einsum("ijkp,pl->ijkl", rup, g.value)
    pt = np.zeros(g.n) if point is None else np.asarray(point, dtype=float)
    return CurvaturePack(pt, g, ginv, gamma, rup, rlow)


def christoffel(metric: MetricField, point: Sequence[float]) -> np.ndarray:
    """``Γ[k, i, j] = Γ^k_ij`` at ``point``."""
    return riemann(metric, point).gamma.value


def riemann(metric: MetricField, point: Sequence[float]) -> CurvaturePack:
    """Full curvature data of ``metric`` at ``point``."""
    return curvature_from_metric_jet(metric.at(point), point)


def scalar_curvature(rlow: np.ndarray, ginv: np.ndarray) -> float:
    return float(np.einsum("il,jk,ijkl->", ginv, ginv, rlow))


def sectional(pack: CurvaturePack, g_at_p: np.ndarray | numkit.SymMatrix, u, v) -> float:
    """Sectional curvature of the plane spanned by ``u`` and ``v``."""
    g = g_at_p.entries if isinstance(g_at_p, numkit.SymMatrix) else np.asarray(g_at_p, dtype=float)
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    denom = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if denom < 1e-14:
        raise ValueError("degenerate plane: vectors are (nearly) dependent")
    num = np.einsum("ijkl,i,j,k,l->", pack.riemann, u, v, v, u)
    return float(num / denom)


def metric_compatibility_residual(pack: CurvaturePack) -> float:
    """``max |∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|``."""
    dg = pack.metric.grad  # [i, j, k]
    gam, g = pack.gamma.value, pack.g
    res = dg - np.einsum("lki,lj->ijk", gam, g) - np.einsum("lkj,il->ijk", gam, g)
    return float(np.abs(res).max(initial=0.0))


def symmetry_residual(pack: CurvaturePack) -> float:
    r = pack.riemann
    scale = max(1.0, float(np.abs(r).max(initial=0.0)))
    parts = [
        r + np.transpose(r, (1, 0, 2, 3)),
        r + np.transpose(r, (0, 1, 3, 2)),
        r - np.transpose(r, (2, 3, 0, 1)),
    ]
    gsym = pack.gamma.value - np.transpose(pack.gamma.value, (0, 2, 1))
    return float(max(np.abs(p).max(initial=0.0) for p in parts + [gsym]) / scale)


def bianchi_residual(pack: CurvaturePack) -> float:
    r = pack.riemann
    cyc = r + np.transpose(r, (1, 2, 0, 3)) + np.transpose(r, (2, 0, 1, 3))
    scale = max(1.0, float(np.abs(r).max(initial=0.0)))
    return float(np.abs(cyc).max(initial=0.0) / scale)
