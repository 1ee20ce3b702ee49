from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from casorati_submersion import fixtures as fx
from casorati_submersion import geometry as geo
from casorati_submersion import numkit as nk
from casorati_submersion import submersion as sm

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def central_diff(f, x, h=1e-5):
    """Central-difference gradient of a scalar or array valued ``f`` (derivative axis last)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_christoffel(metric, p, h=1e-5):
    p = np.asarray(p, dtype=float)
    dg = central_diff(lambda q: metric.evaluate(list(q)), p, h)  # [i, j, k] = ∂_k g_ij
    ginv = np.linalg.inv(metric.evaluate(list(p)))
    first = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", ginv, first)


def coordinate_T(spec, p):
    """Coordinate T^a_bc at p through the light part of the pipeline."""
    sub = sm.SubmersionMap(spec)
    x = nk.seed(p)
    xs = [x[i] for i in range(sub.n1)]
    G = sub.metric.evaluate(xs)
    pack = geo.curvature_from_metric_jet(G, p)
    proj = sm.projectors(sub, G, pack.metric_inv, xs)
    return sm.coordinate_tensors(proj, pack.gamma), pack


def fd_nabla_T(spec, p):
    p = np.asarray(p, dtype=float)
    coord, pack = coordinate_T(spec, p)
    T = coord.T.value
    dT = central_diff(lambda q: coordinate_T(spec, q)[0].T.value, p)  # [a, b, c, k]
    gam = pack.gamma.value
    return (
        np.einsum("abck->kabc", dT)
        + np.einsum("akm,mbc->kabc", gam, T)
        - np.einsum("mkb,amc->kabc", gam, T)
        - np.einsum("mkc,abm->kabc", gam, T)
    )


@pytest.fixture(scope="session")
def analyses():
    """Analysis objects for every fixture default point, computed once."""
    out = {}
    for f in fx.catalog():
        out[f.name] = [sm.analyze(f.spec, p) for p in f.default_points]
    return out


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        print(line)
        request.config.stash.setdefault(_ACCEPTANCE, []).append((number, line))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
