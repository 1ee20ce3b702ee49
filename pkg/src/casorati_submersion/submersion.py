"""Submersion engine: projectors, adapted frames, O'Neill tensors and their derivatives.

Everything is evaluated at a single chart point ``p``.  One order-2 jet seeded
in all total-space coordinates carries the metric; the differential ``dF`` is
obtained symbolically from the map expressions so that the projectors, and
hence the frame fields built from them, also carry two derivatives.  That is
what the covariant derivatives of ``T`` and ``A`` need.

Two independent routes compute the O'Neill tensors:

* the frame route differentiates the adapted frame fields directly
  (``∇_X Y = X(Y^k) ∂_k + Γ^k_ml X^m Y^l ∂_k``);
* the coordinate route builds ``T^a_bc`` and ``A^a_bc`` as (1,2)-tensor fields
  from the projectors, which also yields ``∇T`` and ``∇A``.

The two must agree; their difference is reported as a residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from . import expr as ex
from . import geometry as geo
from . import numkit
from .numkit import Jet2

__all__ = [
    "SubmersionError",
    "RankError",
    "FrameDegeneracyError",
    "DomainViolation",
    "SubmersionSpec",
    "SubmersionMap",
    "Projectors",
    "AdaptedFrame",
    "ONeillTensors",
    "TensorNorms",
    "Analysis",
    "projectors",
    "adapted_frame",
    "analyze",
]

RANK_TOL = 1e-8


class SubmersionError(RuntimeError):
    """Pipeline failure; ``stage`` names the step that failed."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class RankError(SubmersionError):
    pass


class FrameDegeneracyError(SubmersionError):
    pass


class DomainViolation(SubmersionError):
    pass


# --------------------------------------------------------------------------
# specification
# --------------------------------------------------------------------------


def _parse_metric_keys(raw: Mapping[str, str], coords: Sequence[str]) -> dict[tuple[int, int], str]:
    index = {c: i for i, c in enumerate(coords)}
    out: dict[tuple[int, int], str] = {}
    for key, text in raw.items():
        parts = [p.strip() for p in str(key).split(",")]
        if len(parts) != 2:
            raise ValueError(f"metric key {key!r} must look like 'i,j'")
        ij = []
        for p in parts:
            if p in index:
                ij.append(index[p])
            elif p.lstrip("-").isdigit():
                ij.append(int(p))
            else:
                raise ValueError(f"metric key {key!r} names an unknown coordinate {p!r}")
        a, b = sorted(ij)
        if (a, b) in out:
            raise ValueError(f"metric entry ({a}, {b}) given twice")
        out[(a, b)] = str(text)
    return out


@dataclass(frozen=True)
class SubmersionSpec:
    """Chart-level description of a submersion ``F: (N1, g1) → (N2, g2)``.

    ``metric`` and ``base_metric`` map upper-triangle index pairs to
    expression text.  ``frame`` optionally pins the coordinate columns used to
    seed the vertical and horizontal frames.
    """

    coords: tuple[str, ...]
    base_coords: tuple[str, ...]
    metric: Mapping[tuple[int, int], str]
    base_metric: Mapping[tuple[int, int], str]
    map: tuple[str, ...]
    name: str = "spec"
    structure: Mapping[str, Any] | None = None
    space_form: Mapping[str, Any] | None = None
    domain: tuple[str, ...] = ()
    frame: Mapping[str, Sequence[int]] | None = None
    slant: Mapping[str, float] | None = None

    def __post_init__(self):
        if len(self.map) != len(self.base_coords):
            raise ValueError("map needs one expression per base coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("duplicate coordinate names")
        for e in self.map:
            ex.compile_expr(ex.parse(e), self.coords)
        for d in self.domain:
            ex.compile_expr(ex.parse(d), self.coords)

    @property
    def n1(self) -> int:
        return len(self.coords)

    @property
    def n2(self) -> int:
        return len(self.base_coords)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SubmersionSpec":
        coords = tuple(doc["coords"])
        base_coords = tuple(doc["base_coords"])
        frame = doc.get("frame")
        if frame is not None:
            frame = {k: tuple(int(i) for i in v) for k, v in frame.items()}
        return cls(
            coords=coords,
            base_coords=base_coords,
            metric=_parse_metric_keys(doc["metric"], coords),
            base_metric=_parse_metric_keys(doc["base_metric"], base_coords),
            map=tuple(str(m) for m in doc["map"]),
            name=str(doc.get("name", "spec")),
            structure=doc.get("structure"),
            space_form=doc.get("space_form"),
            domain=tuple(str(d) for d in doc.get("domain", ())),
            frame=frame,
            slant=doc.get("slant"),
        )

    def to_dict(self) -> dict[str, Any]:
        def metric_doc(m, names):
            return {f"{names[i]},{names[j]}": m[(i, j)] for (i, j) in sorted(m)}

        doc: dict[str, Any] = {
            "name": self.name,
            "coords": list(self.coords),
            "base_coords": list(self.base_coords),
            "metric": metric_doc(self.metric, self.coords),
            "base_metric": metric_doc(self.base_metric, self.base_coords),
            "map": list(self.map),
        }
        if self.structure is not None:
            doc["structure"] = self.structure
        if self.space_form is not None:
            sf = self.space_form
            doc["space_form"] = [dict(d) for d in sf] if isinstance(sf, (list, tuple)) else dict(sf)
        if self.domain:
            doc["domain"] = list(self.domain)
        if self.frame is not None:
            doc["frame"] = {k: list(v) for k, v in self.frame.items()}
        if self.slant is not None:
            doc["slant"] = dict(self.slant)
        return doc


class SubmersionMap:
    """Compiled form of a :class:`SubmersionSpec`."""

    def __init__(self, spec: SubmersionSpec):
        self.spec = spec
        self.metric = geo.MetricField(spec.coords, spec.metric)
        self.base_metric = geo.MetricField(spec.base_coords, spec.base_metric)
        self.components = [ex.parse(m) for m in spec.map]
        self._map_fns = [ex.compile_expr(e, spec.coords) for e in self.components]
        # dF as expressions: evaluating them on order-2 jets gives ∂F, ∂²F and ∂³F
        self._jac_fns = [
            [ex.compile_expr(ex.diff(e, c), spec.coords) for c in spec.coords] for e in self.components
        ]
        self._domain_fns = [ex.compile_expr(ex.parse(d), spec.coords) for d in spec.domain]

    @property
    def n1(self) -> int:
        return self.spec.n1

    @property
    def n2(self) -> int:
        return self.spec.n2

    def in_domain(self, point: Sequence[float]) -> bool:
        try:
            return all(float(f(list(point))) > 0.0 for f in self._domain_fns)
        except ArithmeticError:
            return False

    def check_domain(self, point: Sequence[float]) -> None:
        if len(point) != self.n1:
            raise DomainViolation("domain", f"point has {len(point)} coordinates, expected {self.n1}")
        if not self.in_domain(point):
            raise DomainViolation("domain", f"point {list(point)} violates the chart domain")

    def value(self, point: Sequence[float]) -> np.ndarray:
        return np.array([float(f(list(point))) for f in self._map_fns])

    def jacobian(self, xs: Sequence) -> Jet2 | np.ndarray:
        rows = []
        jets = [x for x in xs if isinstance(x, Jet2)]
        for fns in self._jac_fns:
            row = []
            for f in fns:
                v = f(xs)
                if jets and not isinstance(v, Jet2):
                    v = numkit.constant(v, jets[0].n, jets[0].order)
                row.append(v)
            rows.append(numkit.stack(row))
        return numkit.stack(rows)


# --------------------------------------------------------------------------
# projectors and frames
# --------------------------------------------------------------------------


@dataclass
class Projectors:
    vertical: Jet2  # Pv[a, b]: (Pv X)^a = Pv[a, b] X^b
    horizontal: Jet2
    jacobian: Jet2
    residual: float  # idempotence / self-adjointness / dF·Pv = 0


def projectors(sub: SubmersionMap, metric: Jet2, metric_inv: Jet2, xs: Sequence[Jet2]) -> Projectors:
    """``P_h = g⁻¹ Jᵀ (J g⁻¹ Jᵀ)⁻¹ J`` and ``P_v = I − P_h`` as order-2 jets."""
    try:
        J = sub.jacobian(xs)
    except ArithmeticError as exc:
        raise SubmersionError("jacobian", str(exc)) from exc
    sv = np.linalg.svd(J.value, compute_uv=False)
    if sv.size == 0 or sv.min() < RANK_TOL * max(1.0, sv.max()):
        raise RankError("projectors", f"dF is rank deficient (singular values {sv})")
    gi_jt = numkit.contract("ab,kb->ak", metric_inv, J)
    m = numkit.contract("ka,al->kl", J, gi_jt)
    ph = numkit.contract("ak,kl->al", gi_jt, numkit.contract("lm,mb->lb", numkit.inverse(m), J))
    pv = numkit.constant(np.eye(sub.n1), metric.n) - ph
    P, g = ph.value, metric.value
    res = max(
        float(np.abs(P @ P - P).max()),
        float(np.abs(g @ P - (g @ P).T).max()),
        float(np.abs(J.value @ pv.value).max()),
    )
    return Projectors(pv, ph, J, res)


def _pivot(columns: np.ndarray, g: np.ndarray, count: int) -> list[int]:
    """Greedy column selection by largest residual g-norm (ties: lowest index)."""
    chosen: list[int] = []
    basis: list[np.ndarray] = []
    for _ in range(count):
        best, best_norm = -1, -1.0
        for k in range(columns.shape[1]):
            if k in chosen:
                continue
            w = columns[:, k].copy()
            for q in basis:
                w = w - (q @ g @ w) * q
            nrm = math.sqrt(max(float(w @ g @ w), 0.0))
            if nrm > best_norm * (1.0 + 1e-12) + 1e-15:
                best, best_norm = k, nrm
        if best_norm < RANK_TOL:
            raise FrameDegeneracyError("frame", f"all candidate columns are degenerate (best norm {best_norm:.3e})")
        w = columns[:, best].copy()
        for q in basis:
            w = w - (q @ g @ w) * q
        basis.append(w / best_norm)
        chosen.append(best)
    return chosen


@dataclass
class AdaptedFrame:
    vertical: Jet2  # n × ℓ, order 2
    horizontal: Jet2  # n × s, order 2
    vertical_pivots: tuple[int, ...]
    horizontal_pivots: tuple[int, ...]

    @property
    def V(self) -> np.ndarray:
        return self.vertical.value

    @property
    def H(self) -> np.ndarray:
        return self.horizontal.value

    @property
    def ell(self) -> int:
        return self.vertical.shape[1]

    @property
    def s(self) -> int:
        return self.horizontal.shape[1]


def adapted_frame(
    proj: Projectors,
    metric: Jet2,
    reference_indices: Mapping[str, Sequence[int]] | None = None,
) -> AdaptedFrame:
    """Orthonormal vertical and horizontal frame fields near the anchor point.

    The coordinate columns fed to Gram-Schmidt are chosen once at the anchor
    (or taken from ``reference_indices``) and then kept fixed, so the frame is
    a smooth field and its jets are meaningful.
    """
    n = metric.shape[0]
    g = metric.value
    ell = int(round(np.trace(proj.vertical.value)))
    s = n - ell
    frames = {}
    for key, P, dim in (("vertical", proj.vertical, ell), ("horizontal", proj.horizontal, s)):
        if reference_indices and reference_indices.get(key) is not None:
            piv = [int(i) for i in reference_indices[key]]
            if len(piv) != dim:
                raise FrameDegeneracyError("frame", f"{key} reference indices {piv} do not match dimension {dim}")
        else:
            piv = _pivot(P.value, g, dim)
        cols = numkit.stack([P[:, k] for k in piv], axis=1)
        try:
            frame = numkit.gram_schmidt(cols, metric, rank_tol=RANK_TOL)
        except numkit.RankDeficiencyError as exc:
            raise FrameDegeneracyError("frame", f"{key} column {piv[exc.index]} is degenerate") from exc
        frames[key] = (frame, tuple(piv))
    return AdaptedFrame(frames["vertical"][0], frames["horizontal"][0], frames["vertical"][1], frames["horizontal"][1])


# --------------------------------------------------------------------------
# tensors
# --------------------------------------------------------------------------


def _covariant(X: Jet2, Y: Jet2, gamma: Jet2) -> Jet2:
    """``(∇_{X_i} Y_j)^k`` as an order-1 jet of shape (n, #X, #Y)."""
    X1, Y1 = X.truncate(), Y.truncate()
    dY = Y.derivative()  # [k, j, m] = ∂_m Y_j^k
    term = numkit.contract("mi,kjm->kij", X1, dY)
    gx = numkit.contract("kml,mi->kli", gamma, X1)
    return term + numkit.contract("kli,lj->kij", gx, Y1)


@dataclass
class ONeillTensors:
    T_H: np.ndarray  # [i, j, α] = g(T_{v_i} v_j, h_α)
    A_V: np.ndarray  # [i, j, α] = g(A_{h_i} h_j, v_α)
    T_mixed: np.ndarray  # [j, i, a] = g(T_{v_j} h_i, v_a)
    A_mixed: np.ndarray  # [i, j, b] = g(A_{h_i} v_j, h_b)
    trace_T: np.ndarray  # horizontal frame components of Σ_i T_{v_i} v_i
    trace_A: np.ndarray  # vertical frame components of Σ_i A_{h_i} h_i
    delta_N: float

    @property
    def ell(self) -> int:
        return self.T_H.shape[0]

    @property
    def s(self) -> int:
        return self.A_V.shape[0]


@dataclass
class TensorNorms:
    T_H: float
    T_V: float
    A_V: float
    A_H: float
    trace_T: float
    trace_A: float

    def as_dict(self) -> dict[str, float]:
        return {
            "norm_T_H_sq": self.T_H,
            "norm_T_V_sq": self.T_V,
            "norm_A_V_sq": self.A_V,
            "norm_A_H_sq": self.A_H,
            "norm_trace_T_sq": self.trace_T,
            "norm_trace_A_sq": self.trace_A,
        }


def tensor_norms(t: ONeillTensors) -> TensorNorms:
    return TensorNorms(
        T_H=float(np.sum(t.T_H**2)),
        T_V=float(np.sum(t.T_mixed**2)),
        A_V=float(np.sum(t.A_V**2)),
        A_H=float(np.sum(t.A_mixed**2)),
        trace_T=float(np.sum(t.trace_T**2)),
        trace_A=float(np.sum(t.trace_A**2)),
    )


@dataclass
class CoordinateTensors:
    """O'Neill tensors as coordinate (1,2)-tensors with one derivative."""

    T: Jet2  # T[a, b, c] = (T_{∂b} ∂c)^a, order 1
    A: Jet2
    nabla_T: np.ndarray  # [k, a, b, c] = ∇_k T^a_bc
    nabla_A: np.ndarray


def _nabla(t: Jet2, gam: np.ndarray) -> np.ndarray:
    d = np.einsum("abck->kabc", t.grad)
    tv = t.value
    return (
        d
        + np.einsum("akd,dbc->kabc", gam, tv)
        - np.einsum("dkb,adc->kabc", gam, tv)
        - np.einsum("dkc,abd->kabc", gam, tv)
    )


def coordinate_tensors(proj: Projectors, gamma: Jet2) -> CoordinateTensors:
    pv, ph = proj.vertical, proj.horizontal
    pv1, ph1 = pv.truncate(), ph.truncate()
    dpv, dph = pv.derivative(), ph.derivative()  # [k, c, m] = ∂_m P^k_c

    def nabla_field(Pdir1: Jet2, Pfield: Jet2, dPfield: Jet2) -> Jet2:
        # (∇_{P ∂b} (Q ∂c))^k = P^m_b ∂_m Q^k_c + Γ^k_ml P^m_b Q^l_c
        term = numkit.contract("mb,kcm->kbc", Pdir1, dPfield)
        gp = numkit.contract("kml,mb->klb", gamma, Pdir1)
        return term + numkit.contract("klb,lc->kbc", gp, Pfield)

    T = numkit.contract("ak,kbc->abc", ph1, nabla_field(pv1, pv1, dpv)) + numkit.contract(
        "ak,kbc->abc", pv1, nabla_field(pv1, ph1, dph)
    )
    A = numkit.contract("ak,kbc->abc", pv1, nabla_field(ph1, ph1, dph)) + numkit.contract(
        "ak,kbc->abc", ph1, nabla_field(ph1, pv1, dpv)
    )
    gam = gamma.value
    return CoordinateTensors(T, A, _nabla(T, gam), _nabla(A, gam))


def frame_tensors(frame: AdaptedFrame, metric: Jet2, gamma: Jet2) -> tuple[dict[str, Jet2], dict[str, Jet2]]:
    """Frame-route tensor components (order-1 jets) and the covariant derivatives used."""
    V, H = frame.vertical, frame.horizontal
    g1 = metric.truncate()
    gV = numkit.contract("kl,la->ka", g1, V.truncate())
    gH = numkit.contract("kl,la->ka", g1, H.truncate())
    nVV = _covariant(V, V, gamma)
    nHH = _covariant(H, H, gamma)
    nVH = _covariant(V, H, gamma)
    nHV = _covariant(H, V, gamma)
    comps = {
        "T_H": numkit.contract("kij,ka->ija", nVV, gH),
        "A_V": numkit.contract("kij,ka->ija", nHH, gV),
        "T_mixed": numkit.contract("kji,ka->jia", nVH, gV),
        "A_mixed": numkit.contract("kij,kb->ijb", nHV, gH),
        # connection coefficients needed for the frame-route δ(N)
        "HH_on_H": numkit.contract("kij,kb->ijb", nHH, gH),
        "HV_on_V": numkit.contract("kij,ka->ija", nHV, gV),
    }
    cov = {"VV": nVV, "HH": nHH, "VH": nVH, "HV": nHV}
    return comps, cov


def delta_frame_route(comps: dict[str, Jet2], H: np.ndarray) -> float:
    """δ(N) assembled from frame-route jets (independent of the coordinate ∇T)."""
    TH = comps["T_H"]
    dTH = np.einsum("ijam,mb->ijab", TH.grad, H)  # h_b(T_H[i,j,α])
    ell, s = TH.shape[0], TH.shape[2]
    hh = comps["HH_on_H"].value  # [i, i', b] = g(∇_{h_i} h_i', h_b)
    hv = comps["HV_on_V"].value  # [i, j, a] = g(∇_{h_i} v_j, v_a)
    t = TH.value
    total = 0.0
    for i in range(s):
        for j in range(ell):
            # g((∇_{h_i} T)(v_j, v_j), h_i)
            d = dTH[j, j, i, i] - float(t[j, j, :] @ hh[i, i, :])
            d -= float(hv[i, j, :] @ t[:, j, i])
            d -= float(hv[i, j, :] @ t[j, :, i])
            total += d
    return total


# --------------------------------------------------------------------------
# whole-point analysis
# --------------------------------------------------------------------------


@dataclass
class Analysis:
    spec: SubmersionSpec
    point: np.ndarray
    pack: geo.CurvaturePack
    proj: Projectors
    frame: AdaptedFrame
    tensors: ONeillTensors
    coord: CoordinateTensors
    frame_jets: dict[str, Jet2]
    base_point: np.ndarray
    base_metric: np.ndarray
    base_pack: geo.CurvaturePack
    fiber_scalar: float | None
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def ell(self) -> int:
        return self.frame.ell

    @property
    def s(self) -> int:
        return self.frame.s

    @property
    def g(self) -> np.ndarray:
        return self.pack.g

    @cached_property
    def norms(self) -> TensorNorms:
        return tensor_norms(self.tensors)

    @cached_property
    def mixed_sum(self) -> float:
        """``Σ_{i,j} R(h_i, v_j, v_j, h_i)``."""
        V, H = self.frame.V, self.frame.H
        return float(np.einsum("ijkl,ia,jb,kb,la->", self.pack.riemann, H, V, V, H))

    def ambient_block_sum(self, which: str) -> float:
        """``Σ_{i,j} R(e_i, e_j, e_j, e_i)`` over the vertical or horizontal frame."""
        E = self.frame.V if which == "vertical" else self.frame.H
        return float(np.einsum("ijkl,ia,jb,kb,la->", self.pack.riemann, E, E, E, E))

    @cached_property
    def mixed_identity(self) -> dict[str, float]:
        """Both sides of the contracted mixed-curvature relation."""
        return mixed_curvature_terms(self)

    def riemannian_residual(self) -> float:
        return self.residuals["riemannian_submersion"]

    @property
    def is_riemannian(self) -> bool:
        return self.residuals["riemannian_submersion"] < 1e-9


def _fiber_scalar_curvature(sub: SubmersionMap, point: np.ndarray, K: np.ndarray) -> float:
    """Intrinsic scalar curvature of the affine fiber slice ``p + K u``."""
    n, ell = K.shape
    x = Jet2(point, K, np.zeros((n, ell, ell)))
    G = sub.metric.evaluate([x[i] for i in range(n)])
    h = numkit.contract("ka,kl->al", K, numkit.contract("kl,lb->kb", G, K))
    return geo.curvature_from_metric_jet(h).scalar


def mixed_curvature_terms(an: Analysis) -> dict[str, Any]:
    """Residuals of the mixed curvature relation over all frame index choices.

    ``standard`` pairs ``R(X1, F1, F2, X2)`` with the right-hand side; this is
    O'Neill's relation written in the curvature convention used here.
    ``literal`` uses the argument order ``R(X1, F1, X2, F2)``.
    """
    V, H, g = an.frame.V, an.frame.H, an.g
    R = an.pack.riemann
    T, A = an.coord.T.value, an.coord.A.value
    NT, NA = an.coord.nabla_T, an.coord.nabla_A
    t1 = np.einsum("kabc,kp,bq,cr,ad,ds->pqrs", NT, H, V, V, g, H, optimize=True)
    t2 = np.einsum("kabc,kq,bp,cs,ad,dr->pqrs", NA, V, H, H, g, V, optimize=True)
    TVH = np.einsum("abc,bq,cp->aqp", T, V, H)  # T_{v_q} h_p
    t3 = np.einsum("aqp,ad,drs->pqrs", TVH, g, TVH, optimize=True)
    AHV = np.einsum("abc,bp,cq->apq", A, H, V)  # A_{h_p} v_q
    t4 = np.einsum("asr,ad,dpq->pqrs", AHV, g, AHV, optimize=True)
    rhs = t1 + t2 - t3 + t4
    std = np.einsum("ijkl,ip,jq,kr,ls->pqrs", R, H, V, V, H, optimize=True)
    lit = np.einsum("ijkl,ip,jq,kr,ls->pqrs", R, H, V, H, V, optimize=True)
    lit = np.transpose(lit, (0, 1, 3, 2))  # index as [p, q, r, s] with F2 = v_r, X2 = h_s
    return {
        "standard": float(np.abs(std - rhs).max(initial=0.0)),
        "literal": float(np.abs(lit - rhs).max(initial=0.0)),
    }


def analyze(spec_or_map: SubmersionSpec | SubmersionMap, point: Sequence[float]) -> Analysis:
    """Run the full per-point pipeline."""
    sub = spec_or_map if isinstance(spec_or_map, SubmersionMap) else SubmersionMap(spec_or_map)
    spec = sub.spec
    p = np.asarray(point, dtype=float)
    sub.check_domain(p)
    x = numkit.seed(p)
    xs = [x[i] for i in range(sub.n1)]
    try:
        G = sub.metric.evaluate(xs)
    except ArithmeticError as exc:
        raise SubmersionError("metric", str(exc)) from exc
    if not numkit.SymMatrix(G.value).is_positive_definite():
        raise SubmersionError("metric", "metric is not positive definite at the point")
    try:
        pack = geo.curvature_from_metric_jet(G, p)
    except np.linalg.LinAlgError as exc:
        raise SubmersionError("curvature", str(exc)) from exc
    proj = projectors(sub, G, pack.metric_inv, xs)
    frame = adapted_frame(proj, G, spec.frame)
    gamma = pack.gamma

    comps, _cov = frame_tensors(frame, G, gamma)
    coord = coordinate_tensors(proj, gamma)
    V, H, g = frame.V, frame.H, G.value
    TH = comps["T_H"].value
    AV = comps["A_V"].value
    delta = float(np.einsum("kabc,ki,bj,cj,ad,di->", coord.nabla_T, H, V, V, g, H))
    tensors = ONeillTensors(
        T_H=TH,
        A_V=AV,
        T_mixed=comps["T_mixed"].value,
        A_mixed=comps["A_mixed"].value,
        trace_T=np.einsum("iia->a", TH),
        trace_A=np.einsum("iia->a", AV),
        delta_N=delta,
    )

    # base manifold data at F(p)
    q = sub.value(p)
    try:
        base_pack = geo.riemann(sub.base_metric, q)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise SubmersionError("base_metric", str(exc)) from exc
    g2 = base_pack.g

    J = proj.jacobian
    Jv = J.value
    FH = Jv @ H

    affine = float(np.abs(J.grad).max(initial=0.0)) < 1e-12 and float(np.abs(J.hess).max(initial=0.0)) < 1e-12
    fiber_scalar = _fiber_scalar_curvature(sub, p, V) if affine else None

    res: dict[str, float] = {}
    res["projector"] = proj.residual
    B = np.concatenate([V, H], axis=1)
    res["frame_orthonormality"] = float(np.abs(B.T @ g @ B - np.eye(sub.n1)).max())
    res["frame_vertical_kernel"] = float(np.abs(Jv @ V).max(initial=0.0))
    res["riemannian_submersion"] = float(np.abs(H.T @ g @ H - FH.T @ g2 @ FH).max(initial=0.0))
    res["metric_compatibility"] = geo.metric_compatibility_residual(pack)
    res["riemann_symmetry"] = geo.symmetry_residual(pack)
    res["bianchi"] = geo.bianchi_residual(pack)
    res["T_symmetry"] = float(np.abs(TH - np.transpose(TH, (1, 0, 2))).max(initial=0.0))
    res["A_antisymmetry"] = float(np.abs(AV + np.transpose(AV, (1, 0, 2))).max(initial=0.0))
    Tc, Ac = coord.T.value, coord.A.value
    S_T = np.einsum("abc,be,cf,ad,dh->efh", Tc, B, B, g, B)
    S_A = np.einsum("abc,be,cf,ad,dh->efh", Ac, B, B, g, B)
    res["T_skew_adjoint"] = float(np.abs(S_T + np.transpose(S_T, (0, 2, 1))).max())
    res["A_skew_adjoint"] = float(np.abs(S_A + np.transpose(S_A, (0, 2, 1))).max())
    TH_coord = np.einsum("abc,bi,cj,ad,dk->ijk", Tc, V, V, g, H)
    AV_coord = np.einsum("abc,bi,cj,ad,dk->ijk", Ac, H, H, g, V)
    Tm_coord = np.einsum("abc,bj,ci,ad,dk->jik", Tc, V, H, g, V)
    Am_coord = np.einsum("abc,bi,cj,ad,dk->ijk", Ac, H, V, g, H)
    res["dual_route_tensors"] = float(
        max(
            np.abs(TH - TH_coord).max(initial=0.0),
            np.abs(AV - AV_coord).max(initial=0.0),
            np.abs(tensors.T_mixed - Tm_coord).max(initial=0.0),
            np.abs(tensors.A_mixed - Am_coord).max(initial=0.0),
        )
    )
    res["dual_route_delta"] = abs(delta - delta_frame_route(comps, H))
    # brackets of horizontal frame fields
    Hj = frame.horizontal
    dH = Hj.derivative().value  # [k, j, m]
    br = np.einsum("mi,kjm->kij", H, dH) - np.einsum("mj,kim->kij", H, dH)
    br_v = np.einsum("kij,kl,la->ija", br, g, V)
    res["bracket_antisymmetrized"] = float(np.abs((AV - np.transpose(AV, (1, 0, 2))) - br_v).max(initial=0.0))
    res["bracket_half"] = float(np.abs(AV - 0.5 * br_v).max(initial=0.0))

    an = Analysis(
        spec=spec,
        point=p,
        pack=pack,
        proj=proj,
        frame=frame,
        tensors=tensors,
        coord=coord,
        frame_jets=comps,
        base_point=q,
        base_metric=g2,
        base_pack=base_pack,
        fiber_scalar=fiber_scalar,
        residuals=res,
    )
    mixed = mixed_curvature_terms(an)
    res["mixed_curvature"] = mixed["standard"]
    res["mixed_curvature_literal"] = mixed["literal"]
    return an
