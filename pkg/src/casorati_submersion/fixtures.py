"""Built-in catalog of worked submersions with expected values and verdicts.

Five fixtures transcribe the worked examples of the source text; ``example6``
is a generic rotated flat submersion, and three auxiliary fixtures cover a
flat product, a non-integrable horizontal distribution and a curved model
(the quaternionic Hopf fibration in stereographic charts).

``expected_verdict`` records the verdict stated in prose for the named
theorem.  It is data to compare against, not something the engine assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

import numpy as np

from .submersion import SubmersionSpec

__all__ = ["Expected", "Fixture", "catalog", "get", "names"]


@dataclass(frozen=True)
class Expected:
    """An expected quantity: a constant or a function of the point, with a tolerance."""

    value: float | Callable[[np.ndarray], Any]
    tol: float
    source: str = ""

    def at(self, point) -> Any:
        return self.value(np.asarray(point, dtype=float)) if callable(self.value) else self.value


@dataclass(frozen=True)
class Fixture:
    name: str
    spec: SubmersionSpec
    default_points: tuple[tuple[float, ...], ...]
    theorem: str = "general"
    expected: Mapping[str, Expected] = field(default_factory=dict)
    expected_verdict: str | None = None
    description: str = ""

    @property
    def ell(self) -> int:
        return self.spec.n1 - self.spec.n2

    @property
    def s(self) -> int:
        return self.spec.n2


def _diag(coords, diag):
    return {(i, i): d for i, d in enumerate(diag)}


def _flat(n):
    return {(i, i): "1" for i in range(n)}


def _example1() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 7))
    spec = SubmersionSpec(
        name="example1",
        coords=coords,
        base_coords=("y1", "y2", "y3"),
        metric=_diag(coords, ["x6^2"] * 5 + ["1"]),
        base_metric={(0, 0): "y3^2", (1, 1): "y3^2", (2, 2): "1"},
        map=("x4", "x5", "x6"),
        domain=("x6^2",),
        frame={"vertical": (0, 1, 2), "horizontal": (3, 4, 5)},
    )

    def t_h(p):
        out = np.zeros((3, 3, 3))
        for i in range(3):
            out[i, i, 2] = -1.0 / p[5]
        return out

    return Fixture(
        "example1",
        spec,
        ((0.0, 0.0, 0.0, 0.0, 0.0, 1.0),),
        theorem="general",
        expected=MappingProxyType(
            {
                "T_H": Expected(t_h, 1e-8, "T_ii^H3 = -1/x6"),
                "A_V": Expected(0.0, 1e-9, "A vanishes"),
            }
        ),
        expected_verdict="strict",
        description="warped metric x6^2 on the fibers; the inequality is stated to be strict",
    )


def _example2() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 7))
    spec = SubmersionSpec(
        name="example2",
        coords=coords,
        base_coords=("y1", "y2", "y3"),
        metric=_diag(coords, ["1", "x2^2", "1", "x4^2", "1", "x6^2"]),
        base_metric=_flat(3),
        map=("x1", "x3", "x5"),
        domain=("x2", "x4", "x6"),
        frame={"vertical": (1, 3, 5), "horizontal": (0, 2, 4)},
    )
    return Fixture(
        "example2",
        spec,
        ((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (0.3, 0.7, -1.2, 2.0, 0.5, 1.5)),
        expected=MappingProxyType({"T_H": Expected(0.0, 1e-9), "A_V": Expected(0.0, 1e-9)}),
        expected_verdict="equality",
        description="flat metric in disguise; equality is stated",
    )


def _example3() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 7))
    spec = SubmersionSpec(
        name="example3",
        coords=coords,
        base_coords=("y1", "y2", "y3"),
        metric=_flat(6),
        base_metric=_flat(3),
        map=("(x1 - x3)/sqrt(2)", "x4", "(x5 + x6)/sqrt(2)"),
        space_form={"kind": "real", "c": 0},
        frame={"vertical": (0, 1, 4), "horizontal": (0, 3, 4)},
    )
    return Fixture(
        "example3",
        spec,
        ((0.0,) * 6, (0.1, -0.4, 0.9, 1.3, -2.0, 0.25)),
        theorem="rsf",
        expected=MappingProxyType({"T_H": Expected(0.0, 1e-9), "A_V": Expected(0.0, 1e-9)}),
        expected_verdict="equality",
        description="Euclidean R^6 onto R^3 by an orthogonal projection",
    )


_J8 = [["0"] * 8 for _ in range(8)]
for _k in range(4):
    _J8[2 * _k][2 * _k + 1] = "-1"
    _J8[2 * _k + 1][2 * _k] = "1"
_J8 = tuple(tuple(r) for r in _J8)


def _example4() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 9))
    spec = SubmersionSpec(
        name="example4",
        coords=coords,
        base_coords=("y1", "y2", "y3", "y4"),
        metric=_flat(8),
        base_metric=_flat(4),
        map=tuple(f"sqrt(x{2 * k + 1}^2 + x{2 * k + 2}^2)" for k in range(4)),
        domain=tuple(f"x{i}^2" for i in range(1, 9)),
        structure={"kind": "J", "matrix": [list(r) for r in _J8]},
        space_form={"kind": "complex", "c": 0},
        frame={"vertical": (0, 2, 4, 6), "horizontal": (1, 3, 5, 7)},
        slant={"class": "anti-invariant"},
    )

    def t_h(p):
        out = np.zeros((4, 4, 4))
        for a in range(4):
            out[a, a, a] = -1.0 / math.hypot(p[2 * a], p[2 * a + 1])
        return out

    return Fixture(
        "example4",
        spec,
        ((0.6, 0.8) * 4,),
        theorem="csf",
        expected=MappingProxyType(
            {
                "T_H": Expected(t_h, 1e-8, "(T^H)^a_aa = -1/tau_a, other components zero"),
                "A_V": Expected(0.0, 1e-9),
                "normQ_sq": Expected(0.0, 1e-9, "anti-invariant"),
                "normPV_sq": Expected(4.0, 1e-9),
            }
        ),
        expected_verdict="strict",
        description="radial map of C^4 onto the positive orthant of R^4",
    )


def _example5() -> Fixture:
    coords = ("t",) + tuple(f"{c}{i}" for i in range(1, 5) for c in ("x", "y"))
    n = len(coords)
    phi = [["0"] * n for _ in range(n)]
    for k in range(4):
        x, y = 1 + 2 * k, 2 + 2 * k
        phi[y][x] = "1"  # φ∂x = ∂y
        phi[x][y] = "-1"  # φ∂y = −∂x
    spec = SubmersionSpec(
        name="example5",
        coords=coords,
        base_coords=("z1", "z2", "z3", "z4"),
        metric={(0, 0): "1", **{(i, i): "exp(t)^2" for i in range(1, n)}},
        base_metric=_flat(4),
        map=("x1", "y1", "x2", "y2"),
        structure={"kind": "phi", "matrix": phi, "xi": ["1"] + ["0"] * (n - 1), "eta": ["1"] + ["0"] * (n - 1)},
        space_form={"kind": "generalized_sasakian", "warping": {"f": "exp(t)", "coord": "t"}},
        frame={"vertical": (0, 5, 6, 7, 8), "horizontal": (1, 2, 3, 4)},
        slant={"class": "invariant"},
    )
    return Fixture(
        "example5",
        spec,
        ((0.0,) * n, (-1.0,) + (0.0,) * (n - 1), (1.0,) + (0.0,) * (n - 1)),
        theorem="gssf",
        expected=MappingProxyType(
            {
                "T_H": Expected(0.0, 1e-9, "T^H vanishes"),
                "A_V": Expected(0.0, 1e-9, "A^V vanishes"),
                "c1": Expected(1.0, 1e-9, "f'^2/f^2 with f = e^t"),
                "c2": Expected(0.0, 1e-9),
                "c3": Expected(0.0, 1e-9, "-f'^2/f^2 + f''/f with f = e^t"),
            }
        ),
        expected_verdict="equality",
        description="warped product R x_f C^4 with f = e^t onto R^4 (n = 4, k = 2)",
    )


def _example6() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 7))
    # orthonormal rows from a fixed rotation, so F is a Riemannian submersion onto flat R^3
    M = np.array(
        [
            [1.0, 0.4, -0.3, 0.2, 0.5, -0.1],
            [0.2, -1.0, 0.6, 0.3, 0.0, 0.4],
            [-0.5, 0.1, 0.3, 1.0, -0.2, 0.7],
        ]
    )
    Q, _ = np.linalg.qr(M.T)
    rows = Q.T
    spec = SubmersionSpec(
        name="example6",
        coords=coords,
        base_coords=("y1", "y2", "y3"),
        metric=_flat(6),
        base_metric=_flat(3),
        map=tuple(" + ".join(f"({float(a)!r})*{c}" for a, c in zip(r, coords)) for r in rows),
        space_form={"kind": "real", "c": 0},
    )
    return Fixture(
        "example6",
        spec,
        ((0.2, -0.1, 0.5, 1.0, -0.7, 0.3),),
        theorem="rsf",
        expected=MappingProxyType({"T_H": Expected(0.0, 1e-9), "A_V": Expected(0.0, 1e-9)}),
        expected_verdict="equality",
        description="generic flat submersion with rotated, non axis-aligned fibers",
    )


def _flat_product() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 7))
    J = [["0"] * 6 for _ in range(6)]
    for k in range(3):
        J[2 * k][2 * k + 1] = "-1"
        J[2 * k + 1][2 * k] = "1"
    spec = SubmersionSpec(
        name="flat_product",
        coords=coords,
        base_coords=("y1", "y2", "y3"),
        metric=_flat(6),
        base_metric=_flat(3),
        map=("x4", "x5", "x6"),
        structure={"kind": "J", "matrix": J},
        space_form=[{"kind": "real", "c": 0}, {"kind": "complex", "c": 0}],
    )
    return Fixture(
        "flat_product",
        spec,
        ((0.0,) * 6,),
        expected=MappingProxyType({"T_H": Expected(0.0, 1e-12), "A_V": Expected(0.0, 1e-12)}),
        expected_verdict="equality",
        description="coordinate projection of Euclidean R^6 onto R^3",
    )


def _heisenberg() -> Fixture:
    coords = ("x", "y", "w", "z1", "z2", "z3")
    spec = SubmersionSpec(
        name="heisenberg",
        coords=coords,
        base_coords=("u1", "u2", "u3"),
        metric={
            (0, 0): "1",
            (1, 1): "1 + x^2",
            (1, 3): "-x",
            (2, 2): "1",
            (3, 3): "1",
            (4, 4): "1",
            (5, 5): "1",
        },
        base_metric=_flat(3),
        map=("x", "y", "w"),
    )
    return Fixture(
        "heisenberg",
        spec,
        ((0.0,) * 6, (0.5, -0.3, 0.2, 1.0, 0.0, 0.0)),
        expected=MappingProxyType({"T_H": Expected(0.0, 1e-9)}),
        description="Heisenberg-type metric dx^2 + dy^2 + (dz1 - x dy)^2 plus flat factors; A is nonzero",
    )


def _quat_mul_conj(a, b):
    """Components of ``a * conj(b)`` for quaternions given as expression strings."""
    c = (b[0], f"(-({b[1]}))", f"(-({b[2]}))", f"(-({b[3]}))")
    a0, a1, a2, a3 = (f"({t})" for t in a)
    c0, c1, c2, c3 = (f"({t})" for t in c)
    return (
        f"{a0}*{c0} - {a1}*{c1} - {a2}*{c2} - {a3}*{c3}",
        f"{a0}*{c1} + {a1}*{c0} + {a2}*{c3} - {a3}*{c2}",
        f"{a0}*{c2} - {a1}*{c3} + {a2}*{c0} + {a3}*{c1}",
        f"{a0}*{c3} + {a1}*{c2} - {a2}*{c1} + {a3}*{c0}",
    )


def _hopf_sphere() -> Fixture:
    coords = tuple(f"x{i}" for i in range(1, 8))
    r2 = " + ".join(f"{c}^2" for c in coords)
    q1 = tuple(f"2*{c}" for c in coords[:4])
    q2 = ("2*x5", "2*x6", "2*x7", f"{r2} - 1")
    q2n = " + ".join(f"({t})^2" for t in q2)
    num = _quat_mul_conj(q1, q2)
    zs = ("z1", "z2", "z3", "z4")
    zr2 = " + ".join(f"{z}^2" for z in zs)
    spec = SubmersionSpec(
        name="hopf_sphere",
        coords=coords,
        base_coords=zs,
        metric={(i, i): f"4/(1 + {r2})^2" for i in range(7)},
        base_metric={(i, i): f"1/(1 + {zr2})^2" for i in range(4)},
        map=tuple(f"({t})/({q2n})" for t in num),
        domain=(q2n,),
        space_form={"kind": "real", "c": 1},
    )
    return Fixture(
        "hopf_sphere",
        spec,
        ((0.1, -0.2, 0.3, 0.15, 0.4, -0.25, 0.35),),
        expected=MappingProxyType(
            {
                "T_H": Expected(0.0, 1e-8, "totally geodesic fibers"),
                "C_H": Expected(3.0, 1e-8),
                "A_V_norm_sq": Expected(12.0, 1e-8),
                "mixed_sum": Expected(12.0, 1e-8),
            }
        ),
        description="quaternionic Hopf fibration S^7(1) onto S^4(1/2) in stereographic charts",
    )


_BUILDERS = (
    _example1,
    _example2,
    _example3,
    _example4,
    _example5,
    _example6,
    _flat_product,
    _heisenberg,
    _hopf_sphere,
)

_CACHE: dict[str, Fixture] = {}


def catalog() -> list[Fixture]:
    if not _CACHE:
        for b in _BUILDERS:
            f = b()
            _CACHE[f.name] = f
    return list(_CACHE.values())


def names() -> list[str]:
    return [f.name for f in catalog()]


def get(name: str) -> Fixture:
    catalog()
    try:
        return _CACHE[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(_CACHE)}") from None
