"""Scalar curvatures, Casorati curvatures and normalized δ-Casorati curvatures.

Hyperplanes of a distribution are parametrized by their unit normal ``w``;
the Casorati curvature of ``w^⊥`` is a quartic polynomial in ``w`` whose
extrema on the unit sphere are found with :func:`numkit.sphere_extremize`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from . import numkit
from .submersion import Analysis

__all__ = [
    "ScalarCurvatures",
    "CasoratiSet",
    "scalar_curvatures",
    "casorati_curvatures",
    "hyperplane_casorati",
    "hyperplane_casorati_batch",
    "hyperplane_casorati_basis",
    "delta_casorati",
    "scalar_identity_residuals",
]


@dataclass(frozen=True)
class ScalarCurvatures:
    """Scalar curvatures at a point.

    ``tau_*`` are half of the corresponding double sums, so for instance
    ``2 * tau_V_N1 = Σ_{i,j} R(v_i, v_j, v_j, v_i)``.  The fiber and
    horizontal values come from the contracted Gauss-type relations.
    """

    ell: int
    s: int
    tau_V_ker: float
    tau_H_perp: float
    tau_V_N1: float
    tau_H_N1: float
    mixed_sum: float
    tau_M1: float
    tau_M1_direct: float

    @property
    def rho_V(self) -> float:
        return 2.0 * self.tau_V_ker / (self.ell * (self.ell - 1))

    @property
    def rho_H(self) -> float:
        return 2.0 * self.tau_H_perp / (self.s * (self.s - 1))

    @property
    def rho_V_N1(self) -> float:
        return 2.0 * self.tau_V_N1 / (self.ell * (self.ell - 1))

    @property
    def rho_H_N1(self) -> float:
        return 2.0 * self.tau_H_N1 / (self.s * (self.s - 1))

    @property
    def decomposition_residual(self) -> float:
        """Ambient scalar curvature against the vertical/horizontal/mixed split."""
        return abs(self.tau_M1 - self.tau_M1_direct)

    def as_dict(self) -> dict[str, float]:
        d = {k: v for k, v in asdict(self).items() if k not in ("ell", "s")}
        if self.ell >= 2 and self.s >= 2:
            d.update(rho_V=self.rho_V, rho_H=self.rho_H, rho_V_N1=self.rho_V_N1, rho_H_N1=self.rho_H_N1)
        return d


def casorati_curvatures(an: Analysis) -> tuple[float, float]:
    """``(C^V, C^H) = (‖T^H‖²/ℓ, ‖A^V‖²/s)``."""
    t = an.tensors
    return float(np.sum(t.T_H**2)) / an.ell, float(np.sum(t.A_V**2)) / an.s


def scalar_curvatures(an: Analysis) -> ScalarCurvatures:
    if an.ell < 2 or an.s < 2:
        raise ValueError("normalized scalar curvatures need ℓ >= 2 and s >= 2")
    n = an.norms
    C_V, C_H = casorati_curvatures(an)
    two_tau_V = an.ambient_block_sum("vertical")
    two_tau_H = an.ambient_block_sum("horizontal")
    two_tau_ker = two_tau_V + n.trace_T - an.ell * C_V
    two_tau_perp = two_tau_H + 3.0 * an.s * C_H
    mixed = an.mixed_sum
    return ScalarCurvatures(
        ell=an.ell,
        s=an.s,
        tau_V_ker=0.5 * two_tau_ker,
        tau_H_perp=0.5 * two_tau_perp,
        tau_V_N1=0.5 * two_tau_V,
        tau_H_N1=0.5 * two_tau_H,
        mixed_sum=mixed,
        tau_M1=0.5 * two_tau_V + 0.5 * two_tau_H + mixed,
        tau_M1_direct=0.5 * an.pack.scalar,
    )


def scalar_identity_residuals(an: Analysis, sc: ScalarCurvatures) -> dict[str, float]:
    """Residuals of the identities linking the ambient and distribution scalar curvatures.

    ``decomposition_as_stated`` checks
    ``2τ = 2τ^⊥ + 2τ^ker − ‖tr T‖² + ℓC^V + 3sC^H − ‖tr A‖² − 2δ(N) + ‖T^V‖² − ‖A^H‖²``.
    ``decomposition_derived`` checks the relation obtained by combining the
    two Gauss-type contractions with the contracted mixed-curvature relation:
    ``2τ = 2τ^⊥ + 2τ^ker − ‖tr T‖² + ℓC^V − 3sC^H + 2δ(N) + 2‖A^H‖² − 2‖T^V‖²``.
    ``mixed_contracted`` checks ``Σ R(h, v, v, h) = δ(N) + ‖A^H‖² − ‖T^V‖²``.
    """
    n = an.norms
    C_V, C_H = casorati_curvatures(an)
    l, s, d = an.ell, an.s, an.tensors.delta_N
    two_tau = 2.0 * sc.tau_M1_direct
    two_perp, two_ker = 2.0 * sc.tau_H_perp, 2.0 * sc.tau_V_ker
    stated = two_perp + two_ker - n.trace_T + l * C_V + 3 * s * C_H - n.trace_A - 2 * d + n.T_V - n.A_H
    derived = two_perp + two_ker - n.trace_T + l * C_V - 3 * s * C_H + 2 * d + 2 * n.A_H - 2 * n.T_V
    out = {
        "scalar_split": sc.decomposition_residual,
        "decomposition_as_stated": abs(two_tau - stated),
        "decomposition_derived": abs(two_tau - derived),
        "mixed_contracted": abs(sc.mixed_sum - (d + n.A_H - n.T_V)),
    }
    if an.fiber_scalar is not None:
        out["gauss_fiber"] = abs(two_ker - an.fiber_scalar)
    # the horizontal Gauss-type relation compared with the base curvature pulled back by F_*
    FH = an.proj.jacobian.value @ an.frame.H
    base = float(np.einsum("ijkl,ia,jb,kb,la->", an.base_pack.riemann, FH, FH, FH, FH))
    out["gauss_horizontal_vs_base"] = abs(two_perp - base)
    return out


# --------------------------------------------------------------------------
# hyperplane Casorati curvatures
# --------------------------------------------------------------------------


def _slices(an_or_array, which: str) -> np.ndarray:
    """Slice stack ``M[i, j, α]`` for the requested distribution."""
    if isinstance(an_or_array, np.ndarray):
        return an_or_array
    t = an_or_array.tensors
    return t.T_H if which == "vertical" else t.A_V


def hyperplane_casorati(M: np.ndarray, w):
    """Casorati curvature of the hyperplane ``w^⊥`` for slices ``M[i, j, α]``.

    Uses ``‖Π M Π‖² = ‖M‖² − ‖Mw‖² − ‖Mᵀw‖² + (wᵀMw)²`` for unit ``w`` and
    ``Π = I − w wᵀ``.  ``w`` may be an array or a :class:`numkit.Jet2`.
    """
    M = np.asarray(M, dtype=float)
    dim = M.shape[0]
    if dim < 3:
        raise ValueError("hyperplane Casorati curvature needs dimension >= 3")
    total = float(np.sum(M**2))
    Mw = numkit.contract("ija,j->ia", M, w)
    wM = numkit.contract("ija,i->ja", M, w)
    wMw = numkit.contract("ia,i->a", Mw, w)
    val = (
        total
        - numkit.contract("ia,ia->", Mw, Mw)
        - numkit.contract("ja,ja->", wM, wM)
        + numkit.contract("a,a->", wMw, wMw)
    )
    return val * (1.0 / (dim - 1))


def hyperplane_casorati_batch(M: np.ndarray, W: np.ndarray) -> np.ndarray:
    """:func:`hyperplane_casorati` for each unit row of ``W``."""
    M = np.asarray(M, dtype=float)
    Mw = np.einsum("ija,nj->nia", M, W)
    wM = np.einsum("ija,ni->nja", M, W)
    wMw = np.einsum("nia,ni->na", Mw, W)
    val = float(np.sum(M**2)) - np.sum(Mw**2, axis=(1, 2)) - np.sum(wM**2, axis=(1, 2)) + np.sum(wMw**2, axis=1)
    return val / (M.shape[0] - 1)


def hyperplane_casorati_basis(M: np.ndarray, basis: np.ndarray) -> float:
    """``(1/k) Σ_α Σ_{i,j} (e_iᵀ M_α e_j)²`` for an orthonormal basis ``e`` (columns)."""
    k = basis.shape[1]
    proj = np.einsum("ija,ip,jq->pqa", M, basis, basis)
    return float(np.sum(proj**2)) / k


@dataclass(frozen=True)
class CasoratiSet:
    C_V: float
    C_H: float
    inf_CL_V: float
    sup_CL_V: float
    inf_CL_H: float
    sup_CL_H: float
    delta_C_V: float
    hat_delta_C_V: float
    delta_C_H: float
    hat_delta_C_H: float
    CL_V_frame: float
    CL_H_frame: float
    diagnostics: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("diagnostics")
        return d


def _extrema(M: np.ndarray, seed_value: int) -> tuple[float, float, dict[str, Any]]:
    dim = M.shape[0]
    if float(np.abs(M).max(initial=0.0)) == 0.0:
        return 0.0, 0.0, {"method": "zero", "converged": True}
    obj = lambda w: hyperplane_casorati(M, w)  # noqa: E731
    batch = lambda W: hyperplane_casorati_batch(M, W)  # noqa: E731
    lo = numkit.sphere_extremize(obj, dim, "min", seed_value=seed_value, batch=batch)
    hi = numkit.sphere_extremize(obj, dim, "max", seed_value=seed_value, batch=batch)
    diag = {
        "method": "sphere",
        "converged": bool(lo.converged and hi.converged),
        "inf_iterations": lo.iterations,
        "sup_iterations": hi.iterations,
        "inf_best_sample": lo.best_sample_value,
        "sup_best_sample": hi.best_sample_value,
        "heuristic": dim > 3,
    }
    return lo.value, hi.value, diag


def delta_casorati(an_or_tensors, *, seed_value: int = numkit.DEFAULT_SEED) -> CasoratiSet:
    """All Casorati quantities from an :class:`Analysis` or a pair ``(T_H, A_V)``."""
    if isinstance(an_or_tensors, tuple):
        TH, AV = an_or_tensors
    else:
        TH, AV = an_or_tensors.tensors.T_H, an_or_tensors.tensors.A_V
    ell, s = TH.shape[0], AV.shape[0]
    if ell < 3 or s < 3:
        raise ValueError("δ-Casorati curvatures need ℓ >= 3 and s >= 3")
    C_V = float(np.sum(TH**2)) / ell
    C_H = float(np.sum(AV**2)) / s
    inf_v, sup_v, dv = _extrema(TH, seed_value)
    inf_h, sup_h, dh = _extrema(AV, seed_value)
    frame_v = float(hyperplane_casorati(TH, np.eye(ell)[-1]))
    frame_h = float(hyperplane_casorati(AV, np.eye(s)[-1]))
    return CasoratiSet(
        C_V=C_V,
        C_H=C_H,
        inf_CL_V=inf_v,
        sup_CL_V=sup_v,
        inf_CL_H=inf_h,
        sup_CL_H=sup_h,
        delta_C_V=0.5 * C_V + (ell + 1) / (2 * ell) * inf_v,
        hat_delta_C_V=2.0 * C_V - (2 * ell - 1) / (2 * ell) * sup_v,
        delta_C_H=0.5 * C_H + (s + 1) / (2 * s) * inf_h,
        hat_delta_C_H=2.0 * C_H - (2 * s - 1) / (2 * s) * sup_h,
        CL_V_frame=frame_v,
        CL_H_frame=frame_h,
        diagnostics={"vertical": dv, "horizontal": dh},
    )
