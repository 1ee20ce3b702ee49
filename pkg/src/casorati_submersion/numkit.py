"""Order-2 forward-mode jets, small dense linear algebra and a sphere optimizer.

A :class:`Jet2` carries the value of a quantity together with its gradient and
Hessian with respect to ``n`` seed variables.  The value may be a scalar or an
array; derivative axes are always appended at the end, so a metric jet of shape
``(n, n)`` has ``grad.shape == (n, n, n)`` and ``hess.shape == (n, n, n, n)``.

A jet whose ``hess`` is ``None`` is an order-1 jet.  It arises when a jet is
differentiated once (:meth:`Jet2.derivative`) and propagates through
arithmetic: mixing order-1 and order-2 operands yields order 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "RankDeficiencyError",
    "Jet2",
    "seed",
    "constant",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "power",
    "contract",
    "inverse",
    "stack",
    "value_of",
    "eval_chain",
    "jet2_eval_chain",
    "SymMatrix",
    "gram_schmidt",
    "QuadraticExtremumProblem",
    "TripathiResult",
    "tripathi_minimum",
    "SphereResult",
    "sphere_extremize",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 0x5EED


class DomainError(ArithmeticError):
    """Raised when an elementary function is evaluated outside its domain."""


class RankDeficiencyError(ValueError):
    """Raised by Gram-Schmidt when a column collapses after projection."""

    def __init__(self, index: int, norm: float):
        super().__init__(f"column {index} is dependent on earlier columns (residual norm {norm:.3e})")
        self.index = index
        self.norm = norm


# --------------------------------------------------------------------------
# Jet2
# --------------------------------------------------------------------------


def _sym(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + np.swapaxes(h, -1, -2))


class Jet2:
    """Truncated second-order Taylor expansion (value, gradient, Hessian)."""

    __slots__ = ("value", "grad", "hess")
    # Make numpy defer to our reflected operators (ndarray * Jet2 -> Jet2.__rmul__).
    __array_ufunc__ = None

    def __init__(self, value, grad, hess=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        if self.grad.shape[:-1] != self.value.shape:
            raise ValueError(f"gradient shape {self.grad.shape} does not extend value shape {self.value.shape}")
        if hess is None:
            self.hess = None
        else:
            hess = np.asarray(hess, dtype=float)
            self.hess = _sym(hess)

    # -- construction -----------------------------------------------------
    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    def truncate(self) -> "Jet2":
        """Drop the Hessian, keeping an order-1 jet."""
        return Jet2(self.value, self.grad, None)

    def derivative(self) -> "Jet2":
        """Order-1 jet of the gradient: value ``grad``, gradient ``hess``.

        The new trailing value axis indexes the differentiation variable.
        """
        if self.hess is None:
            raise ValueError("an order-1 jet has no derivative jet")
        return Jet2(self.grad, self.hess, None)

    # -- helpers --------------------------------------------------------------
    def _lift(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            if other.n != self.n:
                raise ValueError("jets have different numbers of seed variables")
            return other
        return constant(other, self.n, order=self.order)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self) -> "Jet2":
        return self

    def __add__(self, other) -> "Jet2":
        o = self._lift(other)
        v = self.value + o.value
        g = self.grad + o.grad
        h = None if (self.hess is None or o.hess is None) else self.hess + o.hess
        return Jet2(v, g, h)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet2":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Jet2":
        return self._lift(other) - self

    def __mul__(self, other) -> "Jet2":
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            return Jet2(
                self.value * c,
                self.grad * c[..., None],
                None if self.hess is None else self.hess * c[..., None, None],
            )
        o = self._lift(other)
        a, b = self, o
        v = a.value * b.value
        g = a.grad * b.value[..., None] + a.value[..., None] * b.grad
        if a.hess is None or b.hess is None:
            h = None
        else:
            cross = a.grad[..., :, None] * b.grad[..., None, :]
            h = (
                a.hess * b.value[..., None, None]
                + a.value[..., None, None] * b.hess
                + cross
                + np.swapaxes(cross, -1, -2)
            )
        return Jet2(v, g, h)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        if np.any(self.value == 0.0):
            raise DomainError("division by zero")
        inv = 1.0 / self.value
        return _unary(self, inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other) -> "Jet2":
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            if np.any(c == 0.0):
                raise DomainError("division by zero")
            return self * (1.0 / c)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet2":
        return self.reciprocal() * other

    def __pow__(self, p) -> "Jet2":
        return power(self, p)

    # -- array-like access ------------------------------------------------
    def __getitem__(self, idx) -> "Jet2":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis or i is None for i in idx):
            raise IndexError("Jet2 indexing supports integers, slices and integer arrays only")
        return Jet2(self.value[idx], self.grad[idx], None if self.hess is None else self.hess[idx])

    def __len__(self) -> int:
        return len(self.value)

    @property
    def T(self) -> "Jet2":
        if self.ndim != 2:
            raise ValueError("transpose is defined for matrix jets only")
        return contract("ij->ji", self)

    def sum(self, axis=None) -> "Jet2":
        nd = self.ndim
        axes = tuple(range(nd)) if axis is None else tuple(a % nd for a in np.atleast_1d(axis))
        return Jet2(
            self.value.sum(axis=axes),
            self.grad.sum(axis=axes),
            None if self.hess is None else self.hess.sum(axis=axes),
        )


def seed(point: Sequence[float], order: int = 2) -> Jet2:
    """Vector jet of independent variables at ``point`` (identity gradient)."""
    x = np.asarray(point, dtype=float)
    n = x.shape[0]
    hess = np.zeros((n, n, n)) if order == 2 else None
    return Jet2(x, np.eye(n), hess)


def constant(c, n: int, order: int = 2) -> Jet2:
    """Jet of a constant (zero derivatives)."""
    c = np.asarray(c, dtype=float)
    grad = np.zeros(c.shape + (n,))
    hess = np.zeros(c.shape + (n, n)) if order == 2 else None
    return Jet2(c, grad, hess)


def value_of(x):
    """Plain value of a jet or number."""
    return x.value if isinstance(x, Jet2) else x


def _unary(x: Jet2, f0, f1, f2) -> Jet2:
    g = f1[..., None] * x.grad
    if x.hess is None:
        return Jet2(f0, g, None)
    h = f1[..., None, None] * x.hess + f2[..., None, None] * (x.grad[..., :, None] * x.grad[..., None, :])
    return Jet2(f0, g, h)


def sin(x):
    if isinstance(x, Jet2):
        s, c = np.sin(x.value), np.cos(x.value)
        return _unary(x, s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet2):
        s, c = np.sin(x.value), np.cos(x.value)
        return _unary(x, c, -s, -c)
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet2):
        e = np.exp(x.value)
        return _unary(x, e, e, e)
    return np.exp(x)


def log(x):
    v = value_of(x)
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError("ln of a non-positive value")
    if isinstance(x, Jet2):
        inv = 1.0 / x.value
        return _unary(x, np.log(x.value), inv, -inv * inv)
    return np.log(x)


def sqrt(x):
    v = value_of(x)
    if isinstance(x, Jet2):
        if np.any(x.value <= 0.0):
            # the derivative blows up at zero, so a jet needs a strictly positive argument
            raise DomainError("sqrt of a non-positive value")
        r = np.sqrt(x.value)
        return _unary(x, r, 0.5 / r, -0.25 / (r * x.value))
    if np.any(np.asarray(v) < 0.0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(x)


def _int_power(x, k: int):
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


def power(x, p):
    """``x ** p``.

    Integer exponents use repeated multiplication; other exponents require a
    positive base and are evaluated as ``exp(p * ln x)``.
    """
    p_is_jet = isinstance(p, Jet2)
    if not p_is_jet:
        pf = float(p)
        if pf.is_integer():
            k = int(pf)
            if k == 0:
                if isinstance(x, Jet2):
                    return constant(np.ones(x.shape), x.n, order=x.order)
                return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0
            if k < 0:
                if np.any(np.asarray(value_of(x)) == 0.0):
                    raise DomainError("0 raised to a negative power")
                r = _int_power(x, -k)
                return r.reciprocal() if isinstance(r, Jet2) else 1.0 / r
            return _int_power(x, k)
    if np.any(np.asarray(value_of(x)) <= 0.0):
        raise DomainError("non-integer power of a non-positive base")
    return exp(p * log(x))


# --------------------------------------------------------------------------
# contractions and matrix operations on jets
# --------------------------------------------------------------------------


def _free_letters(subscripts: str, k: int) -> str:
    used = set(subscripts)
    out = [c for c in "YZWXVUTSRQPONMLKJIHGFEDCBA" if c not in used]
    return "".join(out[:k])


def contract(subscripts: str, *operands):
    """``numpy.einsum`` lifted to jets (one or two operands).

    Operands may be plain arrays or :class:`Jet2`.  Bilinearity gives the
    product rule for gradient and Hessian.
    """
    if not any(isinstance(o, Jet2) for o in operands):
        return np.einsum(subscripts, *operands)
    lhs, out = subscripts.split("->")
    ins = lhs.split(",")
    if len(ins) != len(operands):
        raise ValueError("subscript count does not match operand count")
    y, z = _free_letters(subscripts, 2)
    if len(operands) == 1:
        (a,) = operands
        (sa,) = ins
        v = np.einsum(f"{sa}->{out}", a.value)
        g = np.einsum(f"{sa}{y}->{out}{y}", a.grad)
        h = None if a.hess is None else np.einsum(f"{sa}{y}{z}->{out}{y}{z}", a.hess)
        return Jet2(v, g, h)
    if len(operands) != 2:
        raise ValueError("contract supports one or two operands")
    a, b = operands
    sa, sb = ins
    if not isinstance(a, Jet2):
        a_arr = np.asarray(a, dtype=float)
        v = np.einsum(f"{sa},{sb}->{out}", a_arr, b.value)
        g = np.einsum(f"{sa},{sb}{y}->{out}{y}", a_arr, b.grad)
        h = None if b.hess is None else np.einsum(f"{sa},{sb}{y}{z}->{out}{y}{z}", a_arr, b.hess)
        return Jet2(v, g, h)
    if not isinstance(b, Jet2):
        b_arr = np.asarray(b, dtype=float)
        v = np.einsum(f"{sa},{sb}->{out}", a.value, b_arr)
        g = np.einsum(f"{sa}{y},{sb}->{out}{y}", a.grad, b_arr)
        h = None if a.hess is None else np.einsum(f"{sa}{y}{z},{sb}->{out}{y}{z}", a.hess, b_arr)
        return Jet2(v, g, h)
    if a.n != b.n:
        raise ValueError("jets have different numbers of seed variables")
    v = np.einsum(f"{sa},{sb}->{out}", a.value, b.value)
    g = np.einsum(f"{sa}{y},{sb}->{out}{y}", a.grad, b.value) + np.einsum(
        f"{sa},{sb}{y}->{out}{y}", a.value, b.grad
    )
    if a.hess is None or b.hess is None:
        h = None
    else:
        cross = np.einsum(f"{sa}{y},{sb}{z}->{out}{y}{z}", a.grad, b.grad)
        h = (
            np.einsum(f"{sa}{y}{z},{sb}->{out}{y}{z}", a.hess, b.value)
            + np.einsum(f"{sa},{sb}{y}{z}->{out}{y}{z}", a.value, b.hess)
            + cross
            + np.swapaxes(cross, -1, -2)
        )
    return Jet2(v, g, h)


def inverse(a):
    """Matrix inverse of a square matrix or matrix jet."""
    if not isinstance(a, Jet2):
        return np.linalg.inv(a)
    x = np.linalg.inv(a.value)
    # dX = -X dA X
    xda = np.einsum("ij,jkY->ikY", x, a.grad)
    g = -np.einsum("ikY,kl->ilY", xda, x)
    if a.hess is None:
        return Jet2(x, g, None)
    # d2X = X (dA_y X dA_z + dA_z X dA_y - d2A_yz) X
    xdax = np.einsum("ikY,kl->ilY", xda, x)  # X dA_y X
    term = np.einsum("ikY,klZ->ilYZ", xda, np.einsum("ij,jkZ->ikZ", x, a.grad))  # X dA_y X dA_z
    term = np.einsum("ikYZ,kl->ilYZ", term, x)
    h = term + np.swapaxes(term, -1, -2) - np.einsum("ij,jkYZ,kl->ilYZ", x, a.hess, x)
    del xdax
    return Jet2(x, g, h)


def stack(items: Sequence, axis: int = 0):
    """Stack jets (or arrays) along a new value axis."""
    if not any(isinstance(t, Jet2) for t in items):
        return np.stack([np.asarray(t, dtype=float) for t in items], axis=axis)
    jets = [t for t in items if isinstance(t, Jet2)]
    n = jets[0].n
    order = min(j.order for j in jets)
    lifted = [t if isinstance(t, Jet2) else constant(t, n, order) for t in items]
    nd = lifted[0].ndim + 1
    ax = axis % nd
    v = np.stack([t.value for t in lifted], axis=ax)
    g = np.stack([t.grad for t in lifted], axis=ax)
    h = None if order == 1 else np.stack([t.hess for t in lifted], axis=ax)
    return Jet2(v, g, h)


# --------------------------------------------------------------------------
# operation traces
# --------------------------------------------------------------------------

_TRACE_UNARY: dict[str, Callable] = {"neg": lambda a: -a, "sin": sin, "cos": cos, "exp": exp, "ln": log, "sqrt": sqrt}
_TRACE_BINARY: dict[str, Callable] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": power,
}


def eval_chain(ops: Sequence[tuple], inputs: Sequence[Jet2]) -> Jet2:
    """Evaluate a straight-line trace of elementary operations on jets.

    Slots ``0..len(inputs)-1`` hold the inputs; every op appends one slot.
    Ops are tuples such as ``("mul", 0, 1)``, ``("sin", 2)``,
    ``("const", 2.5)`` or ``("powi", 0, 3)`` (power with a literal exponent).
    The last slot is returned.
    """
    if not inputs:
        raise ValueError("eval_chain needs at least one input jet")
    n = inputs[0].n
    if any(j.n != n for j in inputs):
        raise ValueError("inputs must share the same gradient dimension")
    slots: list = list(inputs)
    for op in ops:
        name = op[0]
        if name == "const":
            slots.append(constant(op[1], n))
        elif name == "powi":
            slots.append(power(slots[op[1]], op[2]))
        elif name in _TRACE_UNARY:
            slots.append(_TRACE_UNARY[name](slots[op[1]]))
        elif name in _TRACE_BINARY:
            slots.append(_TRACE_BINARY[name](slots[op[1]], slots[op[2]]))
        else:
            raise ValueError(f"unknown trace operation {name!r}")
    return slots[-1]


jet2_eval_chain = eval_chain


# --------------------------------------------------------------------------
# small dense linear algebra
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SymMatrix:
    """A symmetric matrix; symmetry is enforced on construction."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("SymMatrix needs a square matrix")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(m).max(initial=0.0)))):
            raise ValueError("matrix is not symmetric")
        object.__setattr__(self, "entries", 0.5 * (m + m.T))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.entries)
        except np.linalg.LinAlgError:
            return False
        return True

    def require_positive_definite(self) -> "SymMatrix":
        if not self.is_positive_definite():
            raise np.linalg.LinAlgError("metric is not positive definite")
        return self


def _inner(u, G, w):
    return contract("i,i->", u, contract("ij,j->i", G, w))


def gram_schmidt(vectors, inner, *, rank_tol: float = 1e-10):
    """Orthonormalize columns with respect to ``inner``.

    Columns are processed in the given order (no pivoting) with one round of
    re-orthogonalization, which keeps the result a smooth function of the
    input so that it can run on jets.  ``vectors`` and ``inner`` may be plain
    arrays or :class:`Jet2` matrices.
    """
    if isinstance(inner, SymMatrix):
        inner = inner.entries
    m = vectors.shape[1]
    cols: list = []
    for k in range(m):
        w = vectors[:, k]
        for _ in range(2):
            for q in cols:
                w = w - _inner(q, inner, w) * q
        nrm2 = _inner(w, inner, w)
        nv = float(value_of(nrm2))
        if not nv > rank_tol**2:
            raise RankDeficiencyError(k, math.sqrt(max(nv, 0.0)))
        cols.append(w / sqrt(nrm2))
    if not cols:
        return vectors
    return stack(cols, axis=1)


# --------------------------------------------------------------------------
# constrained quadratic minimum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticExtremumProblem:
    """Minimize ``λ1 Σ_{i<n} t_i² + λ2 t_n² − 2 Σ_{i<j} t_i t_j`` on ``Σ t_i = k``."""

    n: int
    lambda1: float
    lambda2: float
    k: float

    @classmethod
    def balanced(cls, n: int, lambda1: float, k: float) -> "QuadraticExtremumProblem":
        """Problem whose ``λ2`` satisfies the closed-form relation ``λ2 = (n−1)/(λ1−n+2)``."""
        return cls(n, lambda1, (n - 1) / (lambda1 - n + 2), k)

    def objective(self, t) -> float:
        t = np.asarray(t, dtype=float)
        s = t.sum()
        cross = 0.5 * (s * s - np.dot(t, t))
        return float(self.lambda1 * np.dot(t[:-1], t[:-1]) + self.lambda2 * t[-1] ** 2 - 2.0 * cross)

    def closed_form_applies(self) -> bool:
        if self.n < 3 or self.lambda1 <= self.n - 2 or self.lambda2 <= 0:
            return False
        target = (self.n - 1) / (self.lambda1 - self.n + 2)
        return abs(self.lambda2 - target) <= 1e-12 * max(1.0, abs(target))


@dataclass(frozen=True)
class TripathiResult:
    argmin: np.ndarray
    min_value: float
    closed_form: bool


def tripathi_minimum(p: QuadraticExtremumProblem) -> TripathiResult:
    """Constrained minimum of the quadratic form on the hyperplane ``Σ t = k``.

    On the plane the cross terms collapse: ``f = Σ w_i t_i² − k²`` with
    ``w = (λ1+1, …, λ1+1, λ2+1)``.  Under the balance relation this gives
    ``t_i = k/(λ1+1)``, ``t_n = k(λ1−n+2)/(λ1+1)`` and minimum 0.  When the
    relation fails the Lagrange system is solved directly and the result is
    flagged with ``closed_form=False``.
    """
    if p.n < 3:
        raise ValueError("the extremum problem needs n >= 3")
    if p.closed_form_applies():
        t = np.full(p.n, p.k / (p.lambda1 + 1.0))
        t[-1] = p.k * (p.lambda1 - p.n + 2.0) / (p.lambda1 + 1.0)
        return TripathiResult(t, p.objective(t), True)
    w = np.full(p.n, p.lambda1 + 1.0)
    w[-1] = p.lambda2 + 1.0
    if np.any(w <= 0.0):
        raise ValueError("objective is unbounded below on the constraint plane")
    kkt = np.zeros((p.n + 1, p.n + 1))
    kkt[: p.n, : p.n] = np.diag(2.0 * w)
    kkt[: p.n, p.n] = 1.0
    kkt[p.n, : p.n] = 1.0
    rhs = np.zeros(p.n + 1)
    rhs[p.n] = p.k
    t = np.linalg.solve(kkt, rhs)[: p.n]
    return TripathiResult(t, p.objective(t), False)


# --------------------------------------------------------------------------
# unit-sphere extremization
# --------------------------------------------------------------------------


@dataclass
class SphereResult:
    w: np.ndarray
    value: float
    converged: bool
    iterations: int
    best_sample_value: float
    starts: list = field(default_factory=list)


def _value_and_grad(objective, w: np.ndarray):
    jet = objective(seed(w, order=1))
    return float(jet.value), np.asarray(jet.grad, dtype=float)


def sphere_extremize(
    objective: Callable,
    d: int,
    mode: str = "min",
    *,
    n_samples: int = 2000,
    n_starts: int = 5,
    seed_value: int = DEFAULT_SEED,
    max_iter: int = 200,
    gtol: float = 1e-10,
    batch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> SphereResult:
    """Minimize or maximize a smooth function on the unit sphere ``S^{d-1}``.

    ``objective`` must accept either a float array of shape ``(d,)`` or a
    :class:`Jet2` vector and return a scalar of the same kind.  Candidates
    come from normalized Gaussian samples; the best ``n_starts`` samples that
    are not near-duplicates up to sign are refined by projected gradient
    steps with Armijo backtracking and finished with Riemannian Newton steps.
    ``batch``, when given, evaluates the objective on an ``(N, d)`` array of
    samples at once and must agree with ``objective`` row by row.
    """
    if d < 2:
        raise ValueError("sphere optimization needs d >= 2")
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    sign = 1.0 if mode == "min" else -1.0

    rng = np.random.default_rng(seed_value)
    samples = rng.standard_normal((n_samples, d))
    samples /= np.linalg.norm(samples, axis=1)[:, None]
    if batch is not None:
        values = sign * np.asarray(batch(samples), dtype=float)
    else:
        values = np.array([sign * float(objective(w)) for w in samples])
    order = np.argsort(values, kind="stable")

    starts: list[np.ndarray] = []
    for idx in order:
        cand = samples[idx]
        if all(abs(float(cand @ s)) < 0.95 for s in starts):
            starts.append(cand)
        if len(starts) == n_starts:
            break

    best = None
    for w0 in starts:
        res = _refine(objective, w0, sign, max_iter, gtol)
        if best is None or res[1] < best[1]:
            best = res
    w, fval, converged, iters = best
    return SphereResult(
        w=w,
        value=sign * fval,
        converged=converged,
        iterations=iters,
        best_sample_value=sign * float(values[order[0]]),
        starts=[s.copy() for s in starts],
    )


_NEWTON_SWITCH = 1e-4  # relative gradient size below which Newton steps take over


def _refine(objective, w0: np.ndarray, sign: float, max_iter: int, gtol: float):
    w = w0 / np.linalg.norm(w0)
    f, g = _value_and_grad(objective, w)
    f, g = sign * f, sign * g
    step = 1.0
    prev = None
    for it in range(max_iter):
        gt = g - (g @ w) * w
        gnorm = float(np.linalg.norm(gt))
        if gnorm < gtol * max(1.0, abs(f)):
            return w, f, True, it
        if gnorm < _NEWTON_SWITCH * max(1.0, abs(f)):
            return _newton_polish(objective, w, sign, gtol, it)
        if prev is not None:
            # Barzilai-Borwein trial length, then Armijo backtracking
            sw, sg = w - prev[0], gt - prev[1]
            denom = float(sw @ sg)
            if denom > 0:
                step = float(sw @ sw) / denom
        step = min(max(step, 1e-12), 1e6)
        accepted = False
        for _ in range(60):
            cand = w - step * gt
            cand /= np.linalg.norm(cand)
            fc = sign * float(objective(cand))
            if fc <= f - 1e-4 * step * gnorm * gnorm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return _newton_polish(objective, w, sign, gtol, it)
        prev = (w, gt)
        w = cand
        f, g = _value_and_grad(objective, w)
        f, g = sign * f, sign * g
    return _newton_polish(objective, w, sign, gtol, max_iter)


def _newton_polish(objective, w: np.ndarray, sign: float, gtol: float, iterations: int, max_steps: int = 20):
    """Riemannian Newton steps on the sphere from a point where gradient steps stalled.

    The Riemannian Hessian is ``P (∇²f − (w·∇f) I) P`` with ``P = I − w wᵀ``.
    A step is taken only while that Hessian is positive definite on the
    tangent space (so the iteration stays at a local minimum of ``sign·f``)
    and the objective does not increase beyond rounding.
    """
    d = w.size
    P = np.eye(d) - np.outer(w, w)
    for k in range(max_steps):
        jet = objective(seed(w, order=2))
        f, g, H = sign * float(jet.value), sign * np.asarray(jet.grad), sign * np.asarray(jet.hess)
        P = np.eye(d) - np.outer(w, w)
        gt = P @ g
        gnorm = float(np.linalg.norm(gt))
        if gnorm < gtol * max(1.0, abs(f)):
            return w, f, True, iterations + k
        hr = P @ (H - float(g @ w) * np.eye(d)) @ P
        tangent = np.linalg.eigvalsh(hr + np.outer(w, w))
        if tangent.min() <= 0.0:
            break
        step = np.linalg.solve(hr + np.outer(w, w), -gt)
        cand = (w + step) / np.linalg.norm(w + step)
        if sign * float(objective(cand)) > f + 1e-14 * max(1.0, abs(f)):
            break
        w = cand
    f, g = _value_and_grad(objective, w)
    f, g = sign * f, sign * g
    gnorm = float(np.linalg.norm(g - (g @ w) * w))
    return w, f, gnorm < gtol * max(1.0, abs(f)), iterations + max_steps
