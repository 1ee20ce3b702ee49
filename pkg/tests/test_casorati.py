from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casorati_submersion import casorati as cz
from casorati_submersion import fixtures as fx
from casorati_submersion import numkit as nk


def _complete_basis(w):
    """Orthonormal basis of w^⊥ (columns)."""
    d = w.size
    q, _ = np.linalg.qr(np.column_stack([w, np.eye(d)]))
    return q[:, 1:d]


@given(st.integers(min_value=0, max_value=100_000), st.sampled_from([3, 4, 5]))
def test_hyperplane_formula_matches_basis(seed_value, dim):
    rng = np.random.default_rng(seed_value)
    M = rng.standard_normal((dim, dim, 3))
    M = M + np.transpose(M, (1, 0, 2))
    w = rng.standard_normal(dim)
    w /= np.linalg.norm(w)
    assert float(cz.hyperplane_casorati(M, w)) == pytest.approx(
        cz.hyperplane_casorati_basis(M, _complete_basis(w)), rel=1e-12, abs=1e-12
    )


def test_hyperplane_needs_dimension_three():
    with pytest.raises(ValueError):
        cz.hyperplane_casorati(np.zeros((2, 2, 1)), np.array([1.0, 0.0]))


def test_example1_casorati_values(analyses):
    an = analyses["example1"][0]
    cs = cz.delta_casorati(an)
    assert cs.C_V == pytest.approx(1.0)
    assert cs.C_H == 0.0
    # T^H slice is -I: every hyperplane sees ‖-I_2‖² / 2 = 1
    assert cs.inf_CL_V == pytest.approx(1.0, abs=1e-12)
    assert cs.sup_CL_V == pytest.approx(1.0, abs=1e-12)
    assert cs.delta_C_V == pytest.approx(7.0 / 6.0)
    assert cs.hat_delta_C_V == pytest.approx(2.0 - 5.0 / 6.0)


def test_example4_casorati_values(analyses):
    cs = cz.delta_casorati(analyses["example4"][0])
    assert cs.C_V == pytest.approx(1.0)  # four unit diagonal entries over ℓ = 4
    # slice a is -e_a e_aᵀ, so C(w^⊥) = Σ_a (1 - w_a²)² / 3 with Σ w_a² = 1:
    # smallest at w_a² = 1/4 (value 3/4), largest at a coordinate axis (value 1)
    assert cs.inf_CL_V == pytest.approx(0.75, abs=1e-9)
    assert cs.sup_CL_V == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", ["example1", "example4", "heisenberg", "hopf_sphere"])
def test_extrema_bound_random_hyperplanes(name, analyses):
    an = analyses[name][0]
    cs = cz.delta_casorati(an)
    rng = np.random.default_rng(7)
    for M, lo, hi in ((an.tensors.T_H, cs.inf_CL_V, cs.sup_CL_V), (an.tensors.A_V, cs.inf_CL_H, cs.sup_CL_H)):
        for _ in range(100):
            w = rng.standard_normal(M.shape[0])
            w /= np.linalg.norm(w)
            v = float(cz.hyperplane_casorati(M, w))
            assert lo - 1e-10 <= v <= hi + 1e-10


def test_delta_casorati_is_seed_stable(analyses):
    an = analyses["heisenberg"][1]
    a = cz.delta_casorati(an, seed_value=1)
    b = cz.delta_casorati(an, seed_value=2)
    assert a.inf_CL_H == pytest.approx(b.inf_CL_H, abs=1e-10)
    assert a.sup_CL_H == pytest.approx(b.sup_CL_H, abs=1e-10)


def test_delta_casorati_requires_dimension_three():
    with pytest.raises(ValueError):
        cz.delta_casorati((np.zeros((2, 2, 3)), np.zeros((3, 3, 2))))


def test_hopf_values(analyses):
    an = analyses["hopf_sphere"][0]
    C_V, C_H = cz.casorati_curvatures(an)
    assert C_V == pytest.approx(0.0, abs=1e-12)
    assert C_H == pytest.approx(3.0)
    assert an.norms.A_V == pytest.approx(12.0)
    assert an.norms.A_H == pytest.approx(12.0)
    assert an.mixed_sum == pytest.approx(12.0)


@pytest.mark.parametrize("name", [f.name for f in fx.catalog() if f.name != "example5"])
def test_derived_scalar_decomposition(name, analyses):
    for an in analyses[name]:
        sc = cz.scalar_curvatures(an)
        res = cz.scalar_identity_residuals(an, sc)
        for key in ("scalar_split", "decomposition_derived", "mixed_contracted", "gauss_horizontal_vs_base"):
            assert res[key] < 1e-9, key
        if "gauss_fiber" in res:
            assert res["gauss_fiber"] < 1e-9


def test_stated_decomposition_residuals_are_frozen(analyses):
    """Regression values of the decomposition in the form it is usually quoted."""
    expected = {"example1": 21.0, "example4": 4.0, "heisenberg": 1.5, "hopf_sphere": 36.0, "example2": 0.0}
    for name, value in expected.items():
        an = analyses[name][0]
        res = cz.scalar_identity_residuals(an, cz.scalar_curvatures(an))
        assert res["decomposition_as_stated"] == pytest.approx(value, abs=1e-9)


def test_scalar_curvatures_example1(analyses):
    sc = cz.scalar_curvatures(analyses["example1"][0])
    assert 2 * sc.tau_V_ker == pytest.approx(0.0, abs=1e-12)
    assert 2 * sc.tau_H_perp == pytest.approx(-2.0)
    assert 2 * sc.tau_V_N1 == pytest.approx(-6.0)
    assert 2 * sc.tau_H_N1 == pytest.approx(-2.0)
    assert sc.rho_H == pytest.approx(-1.0 / 3.0)
    assert sc.decomposition_residual < 1e-12


def test_sphere_extremize_on_casorati_objective_beats_dense_samples():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((3, 3, 2))
    M = M + np.transpose(M, (1, 0, 2))
    r = nk.sphere_extremize(lambda w: cz.hyperplane_casorati(M, w), 3, "min")
    W = rng.standard_normal((10_000, 3))
    W /= np.linalg.norm(W, axis=1)[:, None]
    dense = min(float(cz.hyperplane_casorati(M, w)) for w in W)
    assert r.value <= dense + 1e-12
