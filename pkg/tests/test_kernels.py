"""Simplex least squares and HHI enumeration, on both backends."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cbscm import _backend, _pykernels
from cbscm.scm import solve_inner

from .oracles import compositions, simplex_grid_min

try:
    from cbscm import _kernels
except ImportError:
    _kernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
BACKENDS.append(
    pytest.param(_kernels, id="cython", marks=pytest.mark.skipif(_kernels is None, reason="extension not built"))
)


def random_instance(rng, K=None, I=None):
    K = K or int(rng.integers(1, 7))
    I = I or int(rng.integers(1, 6))
    X0 = rng.normal(size=(K, I))
    if rng.random() < 0.5:
        X1 = X0 @ rng.dirichlet(np.ones(I)) + rng.normal(scale=0.05, size=K)
    else:
        X1 = rng.normal(size=K) * 2
    v = rng.dirichlet(np.ones(K))
    return X1, X0, v


def objective(X1, X0, v, g):
    r = X1 - X0 @ g
    return float(r @ (v * r))


def test_compositions_oracle():
    c = compositions(4, 3)
    assert len(c) == 15 and np.all(c.sum(axis=1) == 4)
    assert len(compositions(100, 5)) == 4598126


def test_backend_is_selected():
    assert _backend.BACKEND in ("python", "cython")


@pytest.mark.parametrize("mod", BACKENDS)
def test_exact_match_optimum(mod):
    X0 = np.array([[0.1, 0.5, 0.9], [1.0, 0.2, 0.4], [0.3, 0.3, 0.8]])
    g, obj, _ = mod.simplex_ls(X0, X0[:, 1].copy())
    assert np.allclose(g, [0, 1, 0], atol=1e-12) and obj < 1e-24


@pytest.mark.parametrize("mod", BACKENDS)
def test_single_donor(mod):
    g, obj, _ = mod.simplex_ls(np.array([[1.0], [2.0]]), np.array([0.0, 0.0]))
    assert g.tolist() == [1.0] and obj == pytest.approx(5.0)


def test_interpolation_midpoint():
    for v in (0.3, 1.0, 7.0):
        G = solve_inner([0.5], [[0.0, 1.0]], [v])
        assert np.allclose(G.values, [0.5, 0.5], atol=1e-12) and G.objective_value < 1e-20


def test_single_donor_objective_is_weighted_residual():
    G = solve_inner([1.0, 2.0], [[0.0], [1.0]], [0.25, 0.75])
    assert G.values.tolist() == [1.0]
    assert G.objective_value == pytest.approx(0.25 * 1 + 0.75 * 1)


def test_solve_inner_validation():
    with pytest.raises(ValueError, match="dimension"):
        solve_inner([1.0, 2.0], np.ones((3, 2)), [0.5, 0.5])
    with pytest.raises(ValueError, match="non-negative"):
        solve_inner([1.0], [[1.0, 2.0]], [-1.0])
    with pytest.raises(ValueError, match="diagonal"):
        solve_inner([1.0, 2.0], np.ones((2, 2)), np.ones((2, 2)))
    G = solve_inner([1.0, 1.0], np.eye(2), np.diag([0.5, 0.5]))
    assert np.allclose(G.values, [0.5, 0.5])


@pytest.mark.parametrize("mod", BACKENDS)
def test_duplicate_columns_are_stable(mod):
    rng = np.random.default_rng(5)
    a = rng.normal(size=6)
    X0 = np.column_stack([a, a, rng.normal(size=6), a])
    b = a + 0.01
    g, obj, _ = mod.simplex_ls(X0, b)
    assert np.all(g >= 0) and g.sum() == pytest.approx(1.0, abs=1e-12)
    ref = ((X0 @ np.array([1.0, 0, 0, 0]) - b) ** 2).sum()
    assert obj <= ref + 1e-12


def test_grid_oracle_small_sample():
    rng = np.random.default_rng(0)
    for _ in range(40):
        X1, X0, v = random_instance(rng, I=int(rng.integers(1, 5)))
        G = solve_inner(X1, X0, v)
        assert G.objective_value <= simplex_grid_min(X1, X0, v) + 1e-8


@pytest.mark.skipif(_kernels is None, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(1)
    for _ in range(300):
        X1, X0, v = random_instance(rng)
        sv = np.sqrt(v)
        gp, op, _ = _pykernels.simplex_ls(sv[:, None] * X0, sv * X1)
        gc, oc, _ = _kernels.simplex_ls(sv[:, None] * X0, sv * X1)
        assert op == pytest.approx(oc, rel=1e-9, abs=1e-13)
        assert np.allclose(gp, gc, atol=1e-7)


@pytest.mark.skipif(_kernels is None, reason="extension not built")
def test_backends_agree_on_weighted_fit():
    rng = np.random.default_rng(2)
    for _ in range(50):
        X1, X0, v = random_instance(rng, K=8, I=5)
        Y0 = rng.normal(size=(12, 5))
        y1 = rng.normal(size=12)
        a = _pykernels.weighted_fit(v, X1, X0, y1, Y0)
        b = _kernels.weighted_fit(v, X1, X0, y1, Y0)
        assert a[0] == pytest.approx(b[0], rel=1e-9) and np.allclose(a[1], b[1], atol=1e-7)


@pytest.mark.parametrize("mod", BACKENDS)
@pytest.mark.parametrize("K, rule, expected", [(2, (2, 1, 0), 1.0), (3, (2, 1, 0), 5 / 9), (3, (3, 1, 0), 0.59375)])
def test_hhi_enumeration(mod, K, rule, expected):
    assert mod.hhi_max_enumerate(K, *rule) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=150, deadline=None)
@given(
    st.integers(1, 6).flatmap(
        lambda K: st.tuples(
            arrays(float, (K, 4), elements=st.floats(-5, 5)),
            arrays(float, (K,), elements=st.floats(-5, 5)),
            arrays(float, (K,), elements=st.floats(0.01, 1)),
        )
    )
)
def test_feasible_and_no_worse_than_equal_weights(data):
    X0, X1, v = data
    G = solve_inner(X1, X0, v)
    assert np.all(G.values >= 0) and abs(G.values.sum() - 1) <= 1e-9
    assert G.objective_value <= objective(X1, X0, v, np.full(4, 0.25)) * (1 + 1e-12) + 1e-12
    # every vertex is feasible too
    for i in range(4):
        assert G.objective_value <= objective(X1, X0, v, np.eye(4)[i]) * (1 + 1e-12) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_v_scaling_invariance(seed, c):
    X1, X0, v = random_instance(np.random.default_rng(seed))
    a = solve_inner(X1, X0, v).values
    b = solve_inner(X1, X0, c * v).values
    assert np.allclose(a, b, atol=1e-8)


def test_deterministic():
    X1, X0, v = random_instance(np.random.default_rng(9), K=6, I=5)
    a = solve_inner(X1, X0, v)
    b = solve_inner(X1, X0, v)
    assert np.array_equal(a.values, b.values) and a.objective_value == b.objective_value
