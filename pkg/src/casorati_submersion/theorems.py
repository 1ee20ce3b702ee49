"""Space-form models, structure quantities, inequality right-hand sides and verdicts.

The general inequality is the ground truth: its right-hand side is assembled
from curvature sums computed directly from the metric.  The space-form
versions are closed forms in the model constants and the structure norms
``‖Q‖²``, ``‖P‖²``, ``‖P^V‖²``.  Each closed form is cross-checked against
the general right-hand side with the model curvature substituted for the
actual one.  Where the printed closed form is known to disagree with that
substitution, both values are reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import expr as ex
from . import numkit
from .casorati import CasoratiSet, ScalarCurvatures, casorati_curvatures
from .submersion import Analysis, SubmersionError

__all__ = [
    "TABLE1",
    "SpaceFormModel",
    "StructureQuantities",
    "TheoremRHS",
    "InequalityVerdict",
    "models_for",
    "model_curvature",
    "model_tensor",
    "fit_constants",
    "structure_quantities",
    "slant_substitution",
    "theorem_rhs",
    "check_inequality",
    "proof_polynomials",
    "CLASSES",
]

# c1, c2 and c3 as functions of c (and α) for the named generalized Sasakian families
TABLE1 = {
    "sasakian": lambda c, a: ((c + 3) / 4, (c - 1) / 4, (c - 1) / 4),
    "kenmotsu": lambda c, a: ((c - 3) / 4, (c + 1) / 4, (c + 1) / 4),
    "cosymplectic": lambda c, a: (c / 4, c / 4, c / 4),
    "c_alpha": lambda c, a: ((c + 3 * a * a) / 4, (c - a * a) / 4, (c - a * a) / 4),
}

_GSSF_KINDS = ("generalized_sasakian",) + tuple(TABLE1)

CLASSES = ("invariant", "anti-invariant", "slant", "semi-slant", "hemi-slant", "bi-slant")


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------


def _value(v, coords: Sequence[str], point: Sequence[float]) -> float:
    if isinstance(v, str):
        return float(ex.compile_expr(ex.parse(v), coords)(list(point)))
    return float(v)


@dataclass(frozen=True)
class SpaceFormModel:
    """A curvature model evaluated at a point.

    ``family`` is one of ``real``, ``complex`` or ``generalized_sasakian``;
    Table 1 kinds are reduced to the last one on construction and keep their
    original name in ``kind``.  ``structure`` holds the structure tensor
    (``J`` or ``phi``) as a matrix acting on coordinate components, plus
    ``xi`` and ``eta`` for contact structures.
    """

    kind: str
    family: str
    c: float | None = None
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    phi: np.ndarray | None = None
    xi: np.ndarray | None = None
    eta: np.ndarray | None = None

    @classmethod
    def build(
        cls,
        doc: Mapping[str, Any],
        coords: Sequence[str],
        point: Sequence[float],
        structure: Mapping[str, Any] | None,
    ) -> "SpaceFormModel":
        kind = str(doc["kind"])
        phi = xi = eta = None
        if structure is not None:
            phi = np.array([[_value(e, coords, point) for e in row] for row in structure["matrix"]], dtype=float)
            if "xi" in structure:
                xi = np.array([_value(e, coords, point) for e in structure["xi"]], dtype=float)
                eta = np.array([_value(e, coords, point) for e in structure["eta"]], dtype=float)
        if kind == "real":
            return cls(kind, "real", c=_value(doc["c"], coords, point))
        if kind == "complex":
            if phi is None:
                raise ValueError("a complex space form needs a J structure")
            return cls(kind, "complex", c=_value(doc["c"], coords, point), phi=phi)
        if kind in _GSSF_KINDS:
            if phi is None or xi is None:
                raise ValueError("a generalized Sasakian space form needs (phi, xi, eta)")
            if kind in TABLE1:
                c = _value(doc["c"], coords, point)
                a = _value(doc.get("alpha", 0.0), coords, point)
                c1, c2, c3 = TABLE1[kind](c, a)
            elif "warping" in doc:
                c1, c2, c3 = warped_constants(doc["warping"], coords, point)
            else:
                c1, c2, c3 = (_value(doc[k], coords, point) for k in ("c1", "c2", "c3"))
            return cls(kind, "generalized_sasakian", c1=c1, c2=c2, c3=c3, phi=phi, xi=xi, eta=eta)
        raise ValueError(f"unknown space form kind {kind!r}")

    def constants(self) -> dict[str, float]:
        if self.family == "generalized_sasakian":
            return {"c1": self.c1, "c2": self.c2, "c3": self.c3}
        return {"c": self.c}


def warped_constants(warping: Mapping[str, str], coords: Sequence[str], point: Sequence[float]) -> tuple[float, float, float]:
    """Constants of ``ℝ ×_f ℂ^n`` read off the warping function.

    ``c1 = f'²/f²``, ``c2 = 0`` and ``c3 = −f'²/f² + f''/f``, with ``f`` and
    its derivatives taken from an order-2 jet in the warping coordinate.
    """
    var = warping["coord"]
    k = list(coords).index(var)
    t = numkit.seed([point[k]])[0]
    env = [numkit.constant(point[i], 1) if i != k else t for i in range(len(coords))]
    f = ex.compile_expr(ex.parse(warping["f"]), coords)(env)
    f0, f1, f2 = float(f.value), float(f.grad[0]), float(f.hess[0, 0])
    return f1 * f1 / (f0 * f0), 0.0, -f1 * f1 / (f0 * f0) + f2 / f0


def models_for(spec, point: Sequence[float]) -> list[SpaceFormModel]:
    sf = spec.space_form
    if sf is None:
        return []
    docs = sf if isinstance(sf, (list, tuple)) else [sf]
    return [SpaceFormModel.build(d, spec.coords, point, spec.structure) for d in docs]


def model_curvature(model: SpaceFormModel, Z1, Z2, Z3, g: np.ndarray) -> np.ndarray:
    """``R(Z1, Z2)Z3`` for the model, as a coordinate vector."""
    Z1, Z2, Z3 = (np.asarray(z, dtype=float) for z in (Z1, Z2, Z3))

    def ip(a, b):
        return float(a @ g @ b)

    base = ip(Z2, Z3) * Z1 - ip(Z1, Z3) * Z2
    if model.family == "real":
        return model.c * base

    def hermitian(phi):
        return ip(Z1, phi @ Z3) * (phi @ Z2) - ip(Z2, phi @ Z3) * (phi @ Z1) + 2.0 * ip(Z1, phi @ Z2) * (phi @ Z3)

    if model.family == "complex":
        return 0.25 * model.c * (base + hermitian(model.phi))
    if model.phi is None or model.xi is None:
        raise ValueError("structure tensors are required for this model")
    eta, xi = model.eta, model.xi
    contact = (
        (eta @ Z1) * (eta @ Z3) * Z2
        - (eta @ Z2) * (eta @ Z3) * Z1
        + ip(Z1, Z3) * (eta @ Z2) * xi
        - ip(Z2, Z3) * (eta @ Z1) * xi
    )
    return model.c1 * base + model.c2 * hermitian(model.phi) + model.c3 * contact


def model_tensor(model: SpaceFormModel, g: np.ndarray) -> np.ndarray:
    """Lowered model tensor ``R[i, j, k, l] = g(R(∂i, ∂j)∂k, ∂l)``."""
    n = g.shape[0]
    E = np.eye(n)
    out = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                out[i, j, k] = g @ model_curvature(model, E[i], E[j], E[k], g)
    return out


def fit_constants(model: SpaceFormModel, g: np.ndarray, riemann: np.ndarray) -> dict[str, float]:
    """Least-squares model constants reproducing the actual curvature tensor."""
    if model.family == "real":
        basis = [model_tensor(SpaceFormModel("real", "real", c=1.0), g)]
        names = ["c"]
    elif model.family == "complex":
        basis = [model_tensor(SpaceFormModel("complex", "complex", c=1.0, phi=model.phi), g)]
        names = ["c"]
    else:
        names = ["c1", "c2", "c3"]
        basis = []
        for unit in np.eye(3):
            m = SpaceFormModel(
                "generalized_sasakian", "generalized_sasakian", c1=unit[0], c2=unit[1], c3=unit[2],
                phi=model.phi, xi=model.xi, eta=model.eta,
            )
            basis.append(model_tensor(m, g))
    Amat = np.stack([b.ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(Amat, riemann.ravel(), rcond=None)
    resid = float(np.abs(Amat @ coef - riemann.ravel()).max(initial=0.0))
    out = {k: float(v) for k, v in zip(names, coef)}
    out["residual"] = resid
    return out


# --------------------------------------------------------------------------
# structure quantities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StructureQuantities:
    normP_sq: float
    normQ_sq: float
    normPV_sq: float
    xi_position: str  # vertical | horizontal | oblique | none
    slant_angles: tuple[float | None, ...]
    structure_residual: float

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["slant_angles"] = [a for a in self.slant_angles]
        return d


def structure_quantities(model: SpaceFormModel, an: Analysis) -> StructureQuantities:
    if model.phi is None:
        raise ValueError("the model carries no structure tensor")
    phi, g = model.phi, an.g
    Pv, Ph = an.proj.vertical.value, an.proj.horizontal.value
    V, H = an.frame.V, an.frame.H

    def sq(x):
        return float(x @ g @ x)

    phiV, phiH = phi @ V, phi @ H
    normQ = sum(sq(Pv @ phiV[:, i]) for i in range(V.shape[1]))
    normPV = sum(sq(Ph @ phiV[:, i]) for i in range(V.shape[1]))
    normP = sum(sq(Ph @ phiH[:, i]) for i in range(H.shape[1]))

    angles: list[float | None] = []
    for i in range(V.shape[1]):
        full = math.sqrt(max(sq(phiV[:, i]), 0.0))
        if full < 1e-8:
            angles.append(None)
            continue
        ratio = min(1.0, math.sqrt(max(sq(Pv @ phiV[:, i]), 0.0)) / full)
        angles.append(math.acos(ratio))

    n = phi.shape[0]
    if model.xi is None:
        xi_pos = "none"
        res = float(np.abs(phi @ phi + np.eye(n)).max())
        res = max(res, float(np.abs(phi.T @ g @ phi - g).max()))
    else:
        xi, eta = model.xi, model.eta
        nx = math.sqrt(sq(xi))
        h_part = math.sqrt(max(sq(Ph @ xi), 0.0))
        v_part = math.sqrt(max(sq(Pv @ xi), 0.0))
        if h_part < 1e-8 * nx:
            xi_pos = "vertical"
        elif v_part < 1e-8 * nx:
            xi_pos = "horizontal"
        else:
            xi_pos = "oblique"
        res = max(
            float(np.abs(phi @ phi + np.eye(n) - np.outer(xi, eta)).max()),
            abs(float(eta @ xi) - 1.0),
            float(np.abs(phi.T @ g @ phi - g + np.outer(eta, eta)).max()),
        )
    return StructureQuantities(normP, normQ, normPV, xi_pos, tuple(angles), res)


def slant_substitution(cls: str, ell: int, params: Mapping[str, float] | None, xi_vertical: bool) -> float:
    """Value that replaces ``‖Q‖² + 2‖P^V‖²`` in the corollaries."""
    p = dict(params or {})
    m = ell - 1 if xi_vertical else ell
    if cls == "invariant":
        return float(m)
    if cls == "anti-invariant":
        return float(2 * m)
    if cls == "slant":
        th = p["theta"]
        return m * math.cos(th) ** 2 + 2 * m * math.sin(th) ** 2
    d1, d2 = p.get("d1", 0.0), p.get("d2", 0.0)
    if cls == "semi-slant":
        t2 = p["theta2"]
        return 2 * d1 + 2 * d2 * math.cos(t2) ** 2 + 4 * d2 * math.sin(t2) ** 2
    if cls == "hemi-slant":
        t2 = p["theta2"]
        return 2 * d2 * math.cos(t2) ** 2 + 4 * d1 + 4 * d2 * math.sin(t2) ** 2
    if cls == "bi-slant":
        t1, t2 = p["theta1"], p["theta2"]
        return (
            2 * d1 * math.cos(t1) ** 2
            + 2 * d2 * math.cos(t2) ** 2
            + 4 * d1 * math.sin(t1) ** 2
            + 4 * d2 * math.sin(t2) ** 2
        )
    raise ValueError(f"unknown submersion class {cls!r}")


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------


@dataclass
class TheoremRHS:
    kind: str
    rhs_delta: float
    rhs_hat: float
    # general right-hand side with the model curvature substituted; None for kind=general
    model_general_delta: float | None = None
    model_general_hat: float | None = None
    # values of the closed forms exactly as printed, where those differ
    printed_delta: float | None = None
    printed_hat: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def cross_check(self) -> float | None:
        if self.model_general_delta is None:
            return None
        return max(abs(self.rhs_delta - self.model_general_delta), abs(self.rhs_hat - self.model_general_hat))

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["cross_check"] = self.cross_check
        return d


def _common(an: Analysis, cs: CasoratiSet) -> tuple[float, float, float]:
    l, s = an.ell, an.s
    D = s * (s - 1) * l * (l - 1)
    n = an.norms
    tail = (2.0 * an.tensors.delta_N - n.T_V + n.A_H) / D
    base_delta = cs.delta_C_V / (s * (s - 1)) + cs.delta_C_H / (l * (l - 1)) + tail
    base_hat = cs.hat_delta_C_V / (s * (s - 1)) + cs.hat_delta_C_H / (l * (l - 1)) + tail
    return base_delta, base_hat, D


def _curvature_term(two_tau_V: float, two_tau_H: float, mixed: float, D: float) -> float:
    """``ρ_V/(s(s−1)) + ρ_H/(ℓ(ℓ−1)) + 2Σ R(h,v,v,h)/D`` written over the common denominator."""
    return (two_tau_V + two_tau_H + 2.0 * mixed) / D


def _model_sums(an: Analysis, model: SpaceFormModel) -> tuple[float, float, float]:
    Rm = model_tensor(model, an.g)
    V, H = an.frame.V, an.frame.H
    tv = float(np.einsum("ijkl,ia,jb,kb,la->", Rm, V, V, V, V))
    th = float(np.einsum("ijkl,ia,jb,kb,la->", Rm, H, H, H, H))
    mx = float(np.einsum("ijkl,ia,jb,kb,la->", Rm, H, V, V, H))
    return tv, th, mx


def _pick_model(models: Sequence[SpaceFormModel], family: str) -> SpaceFormModel:
    for m in models:
        if m.family == family:
            return m
    raise ValueError(f"no {family} space form is declared for this submersion")


def theorem_rhs(
    kind: str,
    an: Analysis,
    sc: ScalarCurvatures,
    cs: CasoratiSet,
    models: Sequence[SpaceFormModel] = (),
    slant: Mapping[str, Any] | None = None,
) -> TheoremRHS:
    """Right-hand sides (δ_C version and δ̂_C version) for one theorem kind.

    ``kind`` is ``general``, ``rsf``, ``csf``, ``gssf`` or ``corollary:CLASS``.
    """
    l, s = an.ell, an.s
    if l < 3 or s < 3:
        raise ValueError("the inequalities need ℓ >= 3 and s >= 3")
    base_delta, base_hat, D = _common(an, cs)
    if kind == "general":
        curv = _curvature_term(2 * sc.tau_V_N1, 2 * sc.tau_H_N1, sc.mixed_sum, D)
        return TheoremRHS(kind, base_delta + curv, base_hat + curv)

    poly = l * l + s * s + 2 * s * l - l - s
    if kind == "rsf":
        m = _pick_model(models, "real")
        curv = m.c * poly / D
        printed = (m.c * (l * l - l + s * s - s) + 2.0 * s * l) / D
        tv, th, mx = _model_sums(an, m)
        mg = _curvature_term(tv, th, mx, D)
        out = TheoremRHS(kind, base_delta + curv, base_hat + curv, base_delta + mg, base_hat + mg,
                         base_delta + printed, base_hat + printed)
        if abs(printed - curv) > 1e-12:
            out.notes.append("printed mixed term 2/((s-1)(l-1)) lacks the factor c; both values reported")
        return out

    cls = None
    if kind.startswith("corollary:"):
        cls = kind.split(":", 1)[1]
        if cls not in CLASSES:
            raise ValueError(f"unknown corollary class {cls!r}")
        fams = {m.family for m in models}
        family = "complex" if "complex" in fams else "generalized_sasakian"
    elif kind == "csf":
        family = "complex"
    elif kind == "gssf":
        family = "generalized_sasakian"
    else:
        raise ValueError(f"unknown theorem kind {kind!r}")

    m = _pick_model(models, family)
    sq = structure_quantities(m, an)
    if family == "generalized_sasakian" and sq.xi_position not in ("vertical", "horizontal"):
        raise SubmersionError("theorem", f"ξ is {sq.xi_position}; the contact inequalities need ξ vertical or horizontal")
    xi_vertical = sq.xi_position == "vertical"
    if cls is None:
        qp = sq.normQ_sq + 2.0 * sq.normPV_sq
    else:
        qp = slant_substitution(cls, l, slant, xi_vertical)
    tv, th, mx = _model_sums(an, m)
    mg = _curvature_term(tv, th, mx, D)
    if family == "complex":
        curv = (0.25 * m.c * poly + 0.75 * m.c * (sq.normP_sq + qp)) / D
        return TheoremRHS(kind, base_delta + curv, base_hat + curv, base_delta + mg, base_hat + mg)
    curv = (m.c1 * poly + 3.0 * m.c2 * (sq.normP_sq + qp) - 2.0 * m.c3 * (l + s - 1)) / D
    if xi_vertical:
        rho_v_model = m.c1 + 3.0 * m.c2 * sq.normQ_sq / (l * (l - 1)) - 2.0 * m.c3 / l
    else:
        rho_v_model = m.c1 + 3.0 * m.c2 * sq.normQ_sq / (l * (l - 1))
    stray = rho_v_model / (s * (s - 1))
    out = TheoremRHS(kind, base_delta + curv, base_hat + curv, base_delta + mg, base_hat + mg,
                     base_delta + curv, base_hat + curv + stray)
    if abs(stray) > 1e-12:
        out.notes.append("printed δ̂ form carries an extra ρ_V/(s(s-1)) term; both values reported")
    return out


# --------------------------------------------------------------------------
# verdicts
# --------------------------------------------------------------------------


@dataclass
class InequalityVerdict:
    kind: str
    lhs: float
    rhs_delta: float
    rhs_hat: float
    gap_delta: float
    gap_hat: float
    equality_flags: dict[str, bool]
    tol_report: float
    holds: bool
    verdict: str  # equality | strict | violated

    @property
    def strict(self) -> bool:
        return self.verdict == "strict"

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["strict"] = self.strict
        return d


def equality_flags(an: Analysis, tol: float = 1e-9) -> dict[str, bool]:
    TH, AV = an.tensors.T_H, an.tensors.A_V
    scale = max(1.0, float(np.abs(TH).max(initial=0.0)))
    l = TH.shape[0]
    diag = np.einsum("iia->ia", TH)
    target = 0.5 * diag[l - 1]
    quasi = bool(np.all(np.abs(diag[: l - 1] - target[None, :]) <= tol * scale))
    off = TH.copy()
    for i in range(l):
        off[i, i, :] = 0.0
    return {
        "quasi_umbilical": quasi,
        "off_diagonal_zero": bool(np.abs(off).max(initial=0.0) <= tol * scale),
        "A_zero": bool(np.abs(AV).max(initial=0.0) <= tol),
    }


def check_inequality(
    an: Analysis,
    sc: ScalarCurvatures,
    cs: CasoratiSet,
    kind: str = "general",
    models: Sequence[SpaceFormModel] = (),
    slant: Mapping[str, Any] | None = None,
    tol: float = 1e-8,
) -> tuple[InequalityVerdict, TheoremRHS]:
    l, s = an.ell, an.s
    lhs = sc.rho_H / (l * (l - 1)) + sc.rho_V / (s * (s - 1))
    rhs = theorem_rhs(kind, an, sc, cs, models, slant)
    gd, gh = rhs.rhs_delta - lhs, rhs.rhs_hat - lhs
    tol_report = tol * max(1.0, abs(rhs.rhs_delta), abs(rhs.rhs_hat))
    holds = gd >= -tol_report and gh >= -tol_report
    if not holds:
        verdict = "violated"
    elif abs(gd) <= tol_report and abs(gh) <= tol_report:
        verdict = "equality"
    else:
        verdict = "strict"
    return (
        InequalityVerdict(kind, lhs, rhs.rhs_delta, rhs.rhs_hat, gd, gh, equality_flags(an), tol_report, holds, verdict),
        rhs,
    )


def proof_polynomials(an: Analysis, sc: ScalarCurvatures, cs: CasoratiSet) -> dict[str, float]:
    """The two quadratic polynomials whose non-negativity yields the inequalities.

    ``P_HV`` and ``Q_HV`` follow their defining combinations, with the
    hyperplane Casorati curvatures taken on the hyperplanes spanned by all
    but the last frame vector and ``2τ`` the ambient scalar curvature.
    ``P_HV_expanded`` is the quadratic form in the tensor components that the
    argument arrives at after substituting the scalar decomposition; it is
    reported to show where the two disagree.
    """
    l, s = an.ell, an.s
    n = an.norms
    C_V, C_H = casorati_curvatures(an)
    tail = (
        2.0 * sc.tau_M1_direct
        + 2.0 * an.tensors.delta_N
        - n.T_V
        + n.A_H
        - 2.0 * sc.tau_H_perp
        - 2.0 * sc.tau_V_ker
    )
    P = (
        0.5 * l * (l - 1) * C_V
        + 0.5 * s * (s - 1) * C_H
        + 0.5 * (l * l - 1) * cs.CL_V_frame
        + 0.5 * (s * s - 1) * cs.CL_H_frame
        + tail
    )
    Q = (
        2.0 * l * (l - 1) * C_V
        + 2.0 * s * (s - 1) * C_H
        - 0.5 * (l - 1) * (2 * l - 1) * cs.CL_V_frame
        - 0.5 * (s - 1) * (2 * s - 1) * cs.CL_H_frame
        + tail
    )
    P_inf = (
        0.5 * l * (l - 1) * C_V
        + 0.5 * s * (s - 1) * C_H
        + 0.5 * (l * l - 1) * cs.inf_CL_V
        + 0.5 * (s * s - 1) * cs.inf_CL_H
        + tail
    )
    # expanded quadratic form
    TH, AV = an.tensors.T_H, an.tensors.A_V
    exp_val = 0.0
    for a in range(TH.shape[2]):
        t = TH[:, :, a]
        exp_val += sum(l * t[i, i] ** 2 + (l + 1) * t[i, l - 1] ** 2 for i in range(l - 1))
        exp_val += 2 * (l + 1) * sum(t[i, j] ** 2 for i in range(l - 1) for j in range(i + 1, l - 1))
        exp_val -= 2 * sum(t[i, i] * t[j, j] for i in range(l) for j in range(i + 1, l))
        exp_val += 0.5 * (l - 1) * t[l - 1, l - 1] ** 2
    for a in range(AV.shape[2]):
        m = AV[:, :, a]
        exp_val += (s + 3) * sum(m[i, i] ** 2 for i in range(s - 1))
        exp_val += 0.5 * (s + 5) * m[s - 1, s - 1] ** 2
        exp_val += 2 * (s + 3) * sum(m[i, j] ** 2 for i in range(s - 1) for j in range(i + 1, s - 1))
        exp_val += (s + 5) * sum(m[i, s - 1] ** 2 for i in range(s - 1))
        exp_val -= float(np.trace(m)) ** 2
    return {"P_HV": float(P), "Q_HV": float(Q), "P_HV_inf": float(P_inf), "P_HV_expanded": float(exp_val)}
