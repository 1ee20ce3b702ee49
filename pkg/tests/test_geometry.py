from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casorati_submersion import fixtures as fx
from casorati_submersion import geometry as geo
from casorati_submersion import theorems as th
from conftest import central_diff, fd_christoffel


def _random_metric(seed_value, n=4):
    """Metric with polynomial and trigonometric entries, positive definite near the origin."""
    rng = np.random.default_rng(seed_value)
    coords = [f"u{i}" for i in range(n)]
    entries = {}
    for i in range(n):
        for j in range(i, n):
            a, b, c = (round(float(v), 3) for v in rng.uniform(-0.3, 0.3, 3))
            k, m = rng.integers(0, n, 2)
            term = f"{a}*u{k}*u{m} + {b}*sin(u{m}) + {c}*u{k}"
            entries[(i, j)] = f"{2 + i} + {term}" if i == j else f"0.2*({term})"
    return geo.MetricField(coords, entries), coords


def test_example1_christoffel_values():
    spec = fx.get("example1").spec
    m = geo.MetricField(spec.coords, spec.metric)
    gam = geo.christoffel(m, [0, 0, 0, 0, 0, 2.0])
    assert gam[0, 0, 5] == pytest.approx(0.5)  # Γ^1_{1,6} = 1/x6
    assert gam[5, 0, 0] == pytest.approx(-2.0)  # Γ^6_{11} = -x6
    assert geo.riemann(m, [0, 0, 0, 0, 0, 2.0]).scalar == pytest.approx(-5.0)


def test_sphere_of_radius_two():
    m = geo.MetricField.diagonal(["th", "ph"], ["4", "4*sin(th)^2"])
    pack = geo.riemann(m, [0.7, 0.1])
    assert geo.sectional(pack, pack.g, [1, 0], [0, 1]) == pytest.approx(0.25)
    assert pack.scalar == pytest.approx(0.5)
    assert pack.riemann[0, 1, 1, 0] > 0  # R(e1, e2, e2, e1) > 0 on a sphere


def test_sectional_rejects_degenerate_plane():
    m = geo.MetricField.diagonal(["a", "b"], ["1", "1"])
    pack = geo.riemann(m, [0, 0])
    with pytest.raises(ValueError):
        geo.sectional(pack, pack.g, [1, 0], [2, 0])


def test_singular_metric():
    m = geo.MetricField(["a", "b"], {(0, 0): "1", (0, 1): "1", (1, 1): "1"})
    with pytest.raises(np.linalg.LinAlgError):
        m.at([0.0, 0.0])


@pytest.mark.parametrize("name", ["example1", "example2", "example5", "hopf_sphere", "heisenberg", "example4"])
def test_christoffel_matches_fd(name):
    f = fx.get(name)
    m = geo.MetricField(f.spec.coords, f.spec.metric)
    for p in f.default_points:
        np.testing.assert_allclose(geo.christoffel(m, p), fd_christoffel(m, p), atol=1e-7)


@given(st.integers(min_value=0, max_value=100_000))
def test_identities_on_random_metrics(seed_value):
    m, coords = _random_metric(seed_value)
    p = np.random.default_rng(seed_value + 1).uniform(-0.3, 0.3, len(coords))
    pack = geo.riemann(m, p)
    assert geo.metric_compatibility_residual(pack) < 1e-9
    assert geo.symmetry_residual(pack) < 1e-9
    assert geo.bianchi_residual(pack) < 1e-9
    np.testing.assert_allclose(pack.gamma.value, fd_christoffel(m, p), atol=1e-7)


@given(st.integers(min_value=0, max_value=100_000))
def test_riemann_matches_fd_of_christoffel(seed_value):
    m, coords = _random_metric(seed_value, n=3)
    p = np.random.default_rng(seed_value).uniform(-0.3, 0.3, 3)
    G = fd_christoffel(m, p)
    dG = central_diff(lambda q: fd_christoffel(m, q, 1e-4), p, 1e-4)  # [p, i, j, m] = ∂_m Γ^p_ij
    rup = (
        np.einsum("pjki->ijkp", dG)
        - np.einsum("pikj->ijkp", dG)
        + np.einsum("mjk,pim->ijkp", G, G)
        - np.einsum("mik,pjm->ijkp", G, G)
    )
    np.testing.assert_allclose(geo.riemann(m, p).riemann_up, rup, atol=1e-5)


def test_hopf_total_space_is_unit_sphere():
    f = fx.get("hopf_sphere")
    p = f.default_points[0]
    m = geo.MetricField(f.spec.coords, f.spec.metric)
    pack = geo.riemann(m, p)
    model = th.SpaceFormModel("real", "real", c=1.0)
    np.testing.assert_allclose(pack.riemann, th.model_tensor(model, pack.g), atol=1e-7)


def test_hopf_base_has_curvature_four():
    f = fx.get("hopf_sphere")
    base = geo.MetricField(f.spec.base_coords, f.spec.base_metric)
    pack = geo.riemann(base, [0.3, -0.2, 0.1, 0.5])
    model = th.SpaceFormModel("real", "real", c=4.0)
    np.testing.assert_allclose(pack.riemann, th.model_tensor(model, pack.g), atol=1e-7)


def test_metric_field_rejects_duplicates_and_bad_indices():
    with pytest.raises(IndexError):
        geo.MetricField(["a"], {(0, 1): "1"})
    with pytest.raises(ValueError):
        geo.MetricField(["a", "b"], {(0, 1): "1", (1, 0): "2"})
