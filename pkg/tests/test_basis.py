import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (duplicate_rows, exact_s_objective, random_orthogonal,
                     random_orthonormal, so2_grid_minimum)
from seba.basis import (DegenerateColumn, EigenBasis, SebaConfig, WeightMismatch,
                        _iterate, objective, seba, seba_weighted, soft_threshold)


def test_soft_threshold_examples():
    assert soft_threshold(0.3, 0.5) == 0.0
    assert soft_threshold(0.8, 0.5) == pytest.approx(0.3)
    assert soft_threshold(-0.8, 0.5) == pytest.approx(-0.3)
    assert soft_threshold(1.0, 0.1) == pytest.approx(0.9)


def test_eigenbasis_validation(rng):
    with pytest.raises(ValueError):
        EigenBasis(rng.standard_normal((5, 2)))
    V = random_orthonormal(rng, 5, 2)
    with pytest.raises(ValueError):
        EigenBasis(V, [0.0, 0.5], "neumann")
    with pytest.raises(ValueError):
        EigenBasis(V, [1.0, 1.5], "markov")
    with pytest.raises(ValueError):
        EigenBasis(V, [0.0, -1.0], "dirichlet")
    with pytest.raises(ValueError):
        EigenBasis(V, kind="banana")
    B = EigenBasis(V, [0.0, -1.0], "neumann")
    assert B.kind == "laplace_neumann"
    assert B.truncate(1).r == 1


def test_from_vectors_orthonormalizes(rng):
    B = EigenBasis.from_vectors(rng.standard_normal((8, 3)))
    assert np.allclose(B.V.T @ B.V, np.eye(3), atol=1e-12)


def test_config_mu_bound():
    cfg = SebaConfig(mu=1.0)
    with pytest.raises(ValueError):
        cfg.resolve_mu(100)
    assert SebaConfig().resolve_mu(100) == pytest.approx(0.099)
    with pytest.raises(ValueError):
        SebaConfig(mu=-1.0)
    with pytest.raises(ValueError):
        SebaConfig(tol=0.0)


def test_constant_column():
    p = 40
    V = np.full((p, 1), 1 / np.sqrt(p))
    res = seba(V)
    assert np.allclose(res.S, 1.0)
    assert res.m[0] == 1.0
    assert res.metrics["subspace_error"] <= 1e-4


def test_two_indicator_blocks(rng):
    p = 20
    ind = np.zeros((p, 2))
    ind[: p // 2, 0] = 1
    ind[p // 2:, 1] = 1
    ind /= np.linalg.norm(ind, axis=0)
    V = ind @ random_orthogonal(rng, 2)
    res = seba(V)
    assert np.array_equal(res.m, [0.0, 0.0])
    assert not np.any((res.S[:, 0] > 0) & (res.S[:, 1] > 0))
    assert res.metrics["subspace_error"] <= 1e-3
    found = sorted(tuple(np.flatnonzero(c)) for c in res.S.T)
    assert found == [tuple(range(10)), tuple(range(10, 20))]


@pytest.mark.parametrize("seed", range(5))
def test_r2_against_rotation_grid(seed):
    rng = np.random.default_rng(seed)
    V = random_orthonormal(rng, 6, 2)
    mu = 0.99 / np.sqrt(6)
    res = seba(V)
    grid, _, _ = so2_grid_minimum(V, mu, step=1e-3)
    found = objective(V, res.S_unit, res.R, mu)
    # a 1e-3 grid is only accurate to about 1e-6; SEBA is never worse than a local optimum
    assert found == pytest.approx(exact_s_objective(V, res.R, mu), abs=1e-12)
    assert found <= grid + 1e-5


def test_output_is_local_minimum(rng):
    V = random_orthonormal(rng, 6, 2)
    mu = 0.99 / np.sqrt(6)
    res = seba(V)
    f0 = exact_s_objective(V, res.R, mu)
    for eps in (1e-3, -1e-3):
        c, s = np.cos(eps), np.sin(eps)
        Rt = np.array([[c, -s], [s, c]]) @ res.R
        assert exact_s_objective(V, Rt, mu) >= f0 - 1e-12


def test_monotone_and_orthogonal(rng):
    V = random_orthonormal(rng, 200, 6)
    res = seba(V, record=True)
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-12)
    assert max(res.orthogonality) <= 1e-10


def test_postconditions(rng):
    V = random_orthonormal(rng, 60, 4)
    res = seba(V)
    assert np.allclose(res.S.max(axis=0), 1.0, atol=1e-12)
    assert np.all(np.diff(res.m) <= 0)
    assert np.all(res.m <= 1)
    assert np.array_equal(res.m == 0, (res.S >= 0).all(axis=0))
    assert np.allclose(res.S_unit @ res.R, V, atol=np.sqrt(res.metrics["subspace_error"] * 4) + 1e-12)
    assert 0 <= res.metrics["subspace_error"] <= 1
    assert 0 < res.metrics["absolute_sparsity"] <= 1
    assert res.converged
    assert np.allclose(res.R @ res.R.T, np.eye(4), atol=1e-12)
    # subspace error is taken against the unit columns and the final rotation
    err = np.linalg.norm(V - res.S_unit @ res.R) ** 2 / 4
    assert res.metrics["subspace_error"] == pytest.approx(err, abs=1e-14)


def test_column_sums_nonnegative(rng):
    res = seba(random_orthonormal(rng, 30, 3))
    assert np.all(res.S_unit.sum(axis=0) >= 0)


def test_permutation_of_input_columns(rng):
    V = random_orthonormal(rng, 40, 3)
    a = seba(V)
    b = seba(V[:, [2, 0, 1]])

    def cols(S):
        return sorted(tuple(np.round(c, 8)) for c in S.T)

    assert np.allclose(np.array(cols(a.S)), np.array(cols(b.S)), atol=1e-8)


def test_degenerate_column():
    # a unit column always has an entry >= 1/sqrt(p), so only an
    # out-of-range threshold can wipe a column out
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DegenerateColumn):
        _iterate(V, 1.0, 1e-14, 10, False)


def test_not_converged_flag(rng):
    V = random_orthonormal(rng, 50, 4)
    res = seba(V, SebaConfig(max_iter=2))
    assert not res.converged and res.iterations == 2
    assert res.S.shape == (50, 4)


def test_sidecar_contents(rng):
    res = seba(random_orthonormal(rng, 20, 2))
    sc = res.sidecar()
    for key in ("mu", "tol", "iterations", "converged", "m", "subspace_error",
                "absolute_sparsity", "relative_sparsity"):
        assert key in sc


def test_weighted_unit_weights_reduce(rng):
    V = random_orthonormal(rng, 30, 3)
    a = seba(V)
    b = seba_weighted(V, weights=np.ones(30))
    assert np.max(np.abs(a.S - b.S)) <= 1e-12
    assert np.max(np.abs(a.R - b.R)) <= 1e-12


def test_weighted_constant_vector_bound():
    nu = np.array([0.5, 1.0, 2.0, 4.0])
    c = np.full(4, 1 / np.sqrt(nu.sum()))
    assert np.isclose(np.sum(nu * c * c), 1.0)
    at_bound = soft_threshold(np.sqrt(nu) * c, np.sqrt(nu) / np.sqrt(nu.sum()))
    assert np.all(at_bound == 0)
    below = soft_threshold(np.sqrt(nu) * c, 0.99 * np.sqrt(nu) / np.sqrt(nu.sum()))
    assert np.all(below > 0)
    with pytest.raises(ValueError):
        seba_weighted(c[:, None], SebaConfig(mu=1 / np.sqrt(nu.sum())), weights=nu)
    res = seba_weighted(c[:, None], weights=nu)
    assert np.allclose(res.S, 1.0)


def test_weighted_duplicate_rows(rng):
    counts = rng.integers(1, 4, size=12)
    M = rng.standard_normal((12, 3))
    # orthonormal in the weighted inner product means the duplicated rows are orthonormal
    Vd, _ = np.linalg.qr(duplicate_rows(M, counts))
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    V = Vd[first]
    w = seba_weighted(V, weights=counts.astype(float))
    u = seba(Vd)
    assert np.max(np.abs(w.S - u.S[first])) <= 1e-8


def test_weight_mismatch(rng):
    V = random_orthonormal(rng, 5, 2)
    with pytest.raises(WeightMismatch):
        seba_weighted(V, weights=np.ones(4))
    with pytest.raises(ValueError):
        seba_weighted(V)


def test_weighted_output_unit_in_weighted_norm(rng):
    nu = rng.uniform(0.5, 2.0, 25)
    M = rng.standard_normal((25, 3))
    B = EigenBasis.from_vectors(M, weights=nu)
    res = seba(B)
    norms = np.sqrt(nu @ res.S_unit ** 2)
    assert np.allclose(norms, 1.0, atol=1e-12)
    assert np.all(nu @ res.S_unit >= 0)


@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_invariants(p, r, seed):
    r = min(r, p - 1) if p > 1 else 1
    rng = np.random.default_rng(seed)
    V = random_orthonormal(rng, p, r)
    try:
        res = seba(V, record=True)
    except DegenerateColumn:
        return
    assert np.allclose(res.S.max(axis=0), 1.0, atol=1e-12)
    assert np.all(np.diff(res.m) <= 0)
    assert np.all(np.diff(res.history) <= 1e-12)
    assert 0 <= res.metrics["subspace_error"] <= 1 + 1e-12
