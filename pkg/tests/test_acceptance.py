"""Acceptance criteria, one test and one summary line per criterion.

Tolerances are fixed by the criteria and are not tuned to the results.  A red
line here is an outcome to explain, not something to work around.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from casorati_submersion import casorati as cz
from casorati_submersion import fixtures as fx
from casorati_submersion import numkit as nk
from casorati_submersion import submersion as sm
from casorati_submersion import theorems as th
from conftest import central_diff, fd_christoffel, fd_nabla_T

EXAMPLE1_GAP_BASELINE = -5.0 / 9.0  # gap_delta at x6 = 1, recorded from the first run


def _check(an, kind="general", *, spec=None):
    sc = cz.scalar_curvatures(an)
    cs = cz.delta_casorati(an)
    models = th.models_for(spec or an.spec, an.point)
    return th.check_inequality(an, sc, cs, kind, models)


# --------------------------------------------------------------------------


def test_criterion_01_example1(acceptance_line):
    spec = fx.get("example1").spec
    worst_rel, worst_other = 0.0, 0.0
    for x6 in (0.5, 0.8, 1.0, 1.5, 2.0):
        an = sm.analyze(spec, [0.1, -0.2, 0.3, 0.4, 0.5, x6])
        TH = an.tensors.T_H.copy()
        diag = np.array([TH[i, i, 2] for i in range(3)])
        worst_rel = max(worst_rel, float(np.max(np.abs(diag + 1.0 / x6) * x6)))
        for i in range(3):
            TH[i, i, 2] = 0.0
        worst_other = max(worst_other, float(np.abs(TH).max()), float(np.abs(an.tensors.A_V).max()))
    v, _ = _check(sm.analyze(spec, [0, 0, 0, 0, 0, 1.0]))
    tensors_ok = worst_rel < 1e-8 and worst_other < 1e-9
    strict_ok = v.gap_delta > 1e-3
    acceptance_line(
        1,
        "Example 1 tensors and strict inequality",
        tensors_ok and strict_ok,
        f"T rel err {worst_rel:.1e}, other components {worst_other:.1e} (ok={tensors_ok}); "
        f"gap_delta at x6=1 is {v.gap_delta:.10g} (baseline {EXAMPLE1_GAP_BASELINE:.10g}), verdict {v.verdict}",
    )
    assert v.gap_delta == pytest.approx(EXAMPLE1_GAP_BASELINE, abs=1e-12)
    assert tensors_ok
    assert strict_ok, f"gap_delta = {v.gap_delta}"


def _random_points(name, count, rng):
    f = fx.get(name)
    sub = sm.SubmersionMap(f.spec)
    out = []
    while len(out) < count:
        p = rng.uniform(-2.0, 2.0, f.spec.n1)
        if sub.in_domain(p):
            out.append(p)
    return out


def test_criterion_02_examples_2_and_3(acceptance_line):
    rng = np.random.default_rng(2)
    worst, flags_ok = 0.0, True
    for name in ("example2", "example3"):
        for p in _random_points(name, 5, rng):
            v, _ = _check(sm.analyze(fx.get(name).spec, p))
            worst = max(worst, abs(v.gap_delta), abs(v.gap_hat))
            flags_ok &= all(v.equality_flags.values())
    ok = worst < 1e-8 and flags_ok
    acceptance_line(2, "Examples 2 and 3 attain equality", ok, f"max |gap| {worst:.1e}, flags all true: {flags_ok}")
    assert ok


def test_criterion_03_example4(acceptance_line):
    f = fx.get("example4")
    p = f.default_points[0]
    an = sm.analyze(f.spec, p)
    expect = np.zeros((4, 4, 4))
    for a in range(4):
        expect[a, a, a] = -1.0 / math.hypot(p[2 * a], p[2 * a + 1])
    err = float(np.abs(an.tensors.T_H - expect).max())
    v, _ = _check(an, "csf")
    ok = err < 1e-8 and not v.equality_flags["quasi_umbilical"] and v.verdict == "strict"
    acceptance_line(
        3,
        "Example 4 tensors and strict inequality",
        ok,
        f"T err {err:.1e}, quasi_umbilical {v.equality_flags['quasi_umbilical']}, verdict {v.verdict} "
        f"(gap_delta {v.gap_delta:.6g})",
    )
    assert ok


def test_criterion_04_example5(acceptance_line):
    f = fx.get("example5")
    worst_T, worst_A, worst_c, worst_gap = 0.0, 0.0, 0.0, 0.0
    for t in (-1.0, 0.0, 1.0):
        an = sm.analyze(f.spec, (t,) + (0.0,) * (f.spec.n1 - 1))
        t = an.tensors
        worst_T = max(worst_T, float(np.abs(t.T_H).max()), float(np.abs(t.T_mixed).max()))
        worst_A = max(worst_A, float(np.abs(t.A_V).max()), float(np.abs(t.A_mixed).max()))
        (m,) = th.models_for(f.spec, an.point)
        worst_c = max(worst_c, abs(m.c1 - 1.0), abs(m.c2), abs(m.c3))
        v, _ = _check(an, "gssf")
        worst_gap = max(worst_gap, abs(v.gap_delta), abs(v.gap_hat))
    ok = worst_T < 1e-9 and worst_A < 1e-9 and worst_c < 1e-9 and worst_gap < 1e-7
    acceptance_line(
        4,
        "Example 5 warped product attains equality",
        ok,
        f"max|T| {worst_T:.1e}, max|A| {worst_A:.3g}, constants err {worst_c:.1e}, max |gap| {worst_gap:.6g}",
    )
    assert ok


IDENTITY_KEYS = (
    ("metric_compatibility", "residuals"),
    ("riemann_symmetry", "residuals"),
    ("bianchi", "residuals"),
    ("gauss_fiber", "scalar"),
    ("mixed_curvature", "residuals"),
    ("decomposition_as_stated", "scalar"),
)


def test_criterion_05_identity_suite(acceptance_line, analyses):
    worst: dict[str, tuple[float, str]] = {k: (0.0, "") for k, _ in IDENTITY_KEYS}
    for name, ans in analyses.items():
        for an in ans:
            scalar = cz.scalar_identity_residuals(an, cz.scalar_curvatures(an))
            for key, where in IDENTITY_KEYS:
                table = an.residuals if where == "residuals" else scalar
                if key in table and table[key] > worst[key][0]:
                    worst[key] = (float(table[key]), name)
    derived = max(
        cz.scalar_identity_residuals(an, cz.scalar_curvatures(an))["decomposition_derived"]
        for name, ans in analyses.items()
        if name != "example5"
        for an in ans
    )
    failing = {k: v for k, v in worst.items() if v[0] >= 1e-6}
    detail = ", ".join(f"{k} {v:.2g}" + (f" ({n})" if n else "") for k, (v, n) in worst.items())
    # diagnostic only: the re-derived decomposition on the genuine submersions
    detail += f"; re-derived decomposition off Example 5 {derived:.1e}"
    acceptance_line(5, "identity suite on every fixture point", not failing, detail)
    assert not failing, failing


def _tripathi_brute_force(p: nk.QuadraticExtremumProblem):
    """Grid search over the constraint plane, coarse then at step 1e-3, with a quadratic polish.

    Coordinates ``t_1..t_{n-1}`` are free and ``t_n = k − Σ``.  The grid
    steps are 0.1, then 0.01, then 1e-3 in a ±0.05 box around the previous
    minimum; the final step
    fits a quadratic to the grid neighbourhood of the best grid point and
    jumps to its minimum, which is exact for a quadratic objective.
    """
    m = p.n - 1

    def values(grid):  # grid [..., m]
        t = np.concatenate([grid, (p.k - grid.sum(axis=-1))[..., None]], axis=-1)
        s = t.sum(axis=-1)
        cross = 0.5 * (s * s - np.sum(t * t, axis=-1))
        return p.lambda1 * np.sum(t[..., :-1] ** 2, axis=-1) + p.lambda2 * t[..., -1] ** 2 - 2.0 * cross

    def search(center, half, step):
        axis = np.arange(-half, half + step / 2, step)
        mesh = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1) + center
        vals = values(mesh)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        return mesh[idx], float(vals[idx])

    # the minimizer satisfies |t_i| <= |k|, so this box contains it
    x, _ = search(np.zeros(m), abs(p.k) + 0.5, 0.1)
    x, _ = search(x, 0.1, 0.01)
    x, grid_val = search(x, 0.05, 1e-3)
    # gradient and Hessian from the neighbouring grid values, then one Newton step
    h = 1e-3
    eye = np.eye(m) * h
    grad = np.array([(values(x + eye[i]) - values(x - eye[i])) / (2 * h) for i in range(m)])
    hess = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            hess[i, j] = (
                values(x + eye[i] + eye[j])
                - values(x + eye[i] - eye[j])
                - values(x - eye[i] + eye[j])
                + values(x - eye[i] - eye[j])
            ) / (4 * h * h)
    polished = x - np.linalg.solve(hess, grad)
    full = lambda y: np.append(y, p.k - y.sum())  # noqa: E731
    return full(x), grid_val, full(polished), float(values(polished))


def test_criterion_06_tripathi(acceptance_line):
    rng = np.random.default_rng(6)
    worst_arg, worst_val, worst_zero = 0.0, 0.0, 0.0
    worst_grid_arg, worst_grid = 0.0, 0.0
    for _ in range(20):
        n = int(rng.integers(3, 5))
        lam1 = float(rng.uniform(n - 2 + 0.2, n + 4.0))
        k = float(rng.uniform(-3.0, 3.0))
        p = nk.QuadraticExtremumProblem.balanced(n, lam1, k)
        res = nk.tripathi_minimum(p)
        grid_arg, grid_val, arg, val = _tripathi_brute_force(p)
        worst_grid_arg = max(worst_grid_arg, float(np.abs(grid_arg - res.argmin).max()))
        worst_arg = max(worst_arg, float(np.abs(arg - res.argmin).max()))
        worst_val = max(worst_val, abs(val - res.min_value))
        worst_grid = max(worst_grid, abs(grid_val - res.min_value))
        worst_zero = max(worst_zero, abs(res.min_value))
        assert res.closed_form
    ok = worst_arg < 1e-4 and worst_val < 1e-6 and worst_zero < 1e-9
    acceptance_line(
        6,
        "constrained quadratic minimum",
        ok,
        f"max argument err {worst_arg:.1e}, value err {worst_val:.1e}; raw grid {worst_grid_arg:.1e} and {worst_grid:.1e}; "
        f"|min| {worst_zero:.1e} over 20 cases with n in {{3, 4}}",
    )
    assert ok


def _random_family(rng, ell, s=3):
    M = rng.standard_normal((ell, ell, s))
    return 0.5 * (M + np.transpose(M, (1, 0, 2)))


def test_criterion_07_hyperplane_extrema(acceptance_line):
    rng = np.random.default_rng(7)
    worst = 0.0
    one_sided = True
    converged = 0
    for case in range(50):
        ell = 3 + case % 2
        M = _random_family(rng, ell)
        cs = cz.delta_casorati((M, _random_family(rng, 3)))
        converged += cs.diagnostics["vertical"]["converged"]
        W = rng.standard_normal((10_000, ell))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        # independent of the library formula: project onto w^⊥ explicitly
        P = np.eye(ell)[None] - W[:, :, None] * W[:, None, :]
        vals = np.sum(np.einsum("nip,pqa,nqj->nija", P, M, P) ** 2, axis=(1, 2, 3)) / (ell - 1)
        worst = max(worst, abs(cs.inf_CL_V - vals.min()), abs(cs.sup_CL_V - vals.max()))
        one_sided &= cs.inf_CL_V <= vals.min() + 1e-12 and cs.sup_CL_V >= vals.max() - 1e-12
    ok = worst < 1e-4
    acceptance_line(
        7,
        "hyperplane Casorati extrema vs dense sampling",
        ok,
        f"max |optimizer - sample| {worst:.1e}; optimizer at least as extreme as every sample: {one_sided}; "
        f"optimizer converged in {converged}/50",
    )
    assert ok


def test_criterion_08_space_form_cross_check(acceptance_line, analyses):
    cases = [
        ("flat_product", "rsf"),
        ("flat_product", "csf"),
        ("example3", "rsf"),
        ("example6", "rsf"),
        ("example5", "gssf"),
    ]
    worst, flagged_ok = 0.0, True
    parts = []
    for name, kind in cases:
        for an in analyses[name]:
            _, rhs = _check(an, kind)
            worst = max(worst, rhs.cross_check)
            pd = rhs.rhs_delta if rhs.printed_delta is None else rhs.printed_delta
            ph = rhs.rhs_hat if rhs.printed_hat is None else rhs.printed_hat
            differs = (pd != rhs.rhs_delta) or (ph != rhs.rhs_hat)
            documented = kind in ("rsf", "gssf")
            # a documented discrepancy must be flagged with both values; otherwise the printed form must agree
            if documented:
                flagged_ok &= differs and bool(rhs.notes)
                d = rhs.as_dict()
                flagged_ok &= all(key in d for key in ("printed_delta", "printed_hat", "rhs_delta", "rhs_hat"))
            else:
                flagged_ok &= abs(pd - rhs.rhs_delta) < 1e-12 and abs(ph - rhs.rhs_hat) < 1e-12
        parts.append(f"{name}/{kind}")
    ok = worst < 1e-9 and flagged_ok
    acceptance_line(
        8,
        "specialized RHS vs general RHS with model curvature",
        ok,
        f"max diff {worst:.1e} over {', '.join(parts)}; discrepancies flagged with both values: {flagged_ok}",
    )
    assert ok


def test_criterion_09_ad_vs_finite_differences(acceptance_line):
    worst_gamma, worst_delta = 0.0, 0.0
    for name in ("example1", "example2", "example5"):
        f = fx.get(name)
        sub = sm.SubmersionMap(f.spec)
        for p in f.default_points:
            an = sm.analyze(f.spec, p)
            fd = fd_christoffel(sub.metric, p)
            worst_gamma = max(worst_gamma, float(np.abs(an.pack.gamma.value - fd).max()))
            dT = fd_nabla_T(f.spec, p)
            V, H, g = an.frame.V, an.frame.H, an.g
            delta_fd = float(np.einsum("kabc,ki,bj,cj,ad,di->", dT, H, V, V, g, H))
            worst_delta = max(worst_delta, abs(an.tensors.delta_N - delta_fd))
    ok = worst_gamma < 1e-5 and worst_delta < 1e-5
    acceptance_line(
        9, "AD against central differences", ok, f"Christoffel {worst_gamma:.1e}, delta(N) {worst_delta:.1e}"
    )
    assert ok


def test_criterion_10_proof_polynomials(acceptance_line, analyses):
    # fixtures whose expected verdict is equality, flat auxiliary ones included
    zero_expected = {f.name for f in fx.catalog() if f.expected_verdict == "equality"}
    negative, wrong_zero = [], []
    for name, ans in analyses.items():
        for an in ans:
            poly = th.proof_polynomials(an, cz.scalar_curvatures(an), cz.delta_casorati(an))
            P, Q = poly["P_HV"], poly["Q_HV"]
            if P < -1e-8 or Q < -1e-8:
                negative.append(f"{name} P={P:.6g} Q={Q:.6g}")
            is_zero = abs(P) < 1e-8 and abs(Q) < 1e-8
            if is_zero != (name in zero_expected):
                wrong_zero.append(f"{name} P={P:.6g}")
    ok = not negative and not wrong_zero
    acceptance_line(
        10,
        "proof polynomials nonnegative, zero exactly on equality cases",
        ok,
        f"negative at [{'; '.join(negative)}]; zero pattern mismatches [{'; '.join(wrong_zero)}]",
    )
    assert ok
