import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_orthonormal
from seba.basis import EigenBasis
from seba.heuristics import (EmptyTable, KindMismatch, min_value_profile, scan, select_kr,
                             weyl_rescale)


def weyl_sequence(C, d, n=10):
    r = np.arange(1, n + 1)
    return -C * (r - 1.0) ** (2.0 / d)


def test_neumann_exact_weyl():
    rs = weyl_rescale(weyl_sequence(2.0, 2), "neumann", 2)
    assert np.allclose(rs.values, -2.0, atol=1e-12)
    assert rs.r[0] == 2
    assert all(abs(m) <= 1e-12 for _, m in rs.drops)
    assert rs.flagged() == []


@given(st.floats(0.01, 100), st.sampled_from([1, 2, 3]))
def test_weyl_constant_any_c_d(C, d):
    rs = weyl_rescale(weyl_sequence(C, d, 12), "laplace_neumann", d)
    assert np.max(np.abs(rs.values + C)) <= 1e-12 * max(1.0, C)
    assert rs.flagged() == []


def test_markov_hand_example():
    lam = np.exp([0.0, -1.0, -1.1, -4.0])
    rs = weyl_rescale(lam, "markov", 2)
    assert np.allclose(rs.values, [-1.0, -0.55, -4.0 / 3.0])
    assert rs.largest_drops(1) == [3]
    assert rs.drops[0][1] == pytest.approx(-0.55 + 4.0 / 3.0)


def test_dirichlet_example():
    rs = weyl_rescale([-1.0, -2.0, -3.0], "dirichlet", 2)
    assert np.allclose(rs.values, -1.0)
    assert list(rs.r) == [1, 2, 3]


def test_kind_mismatch():
    with pytest.raises(KindMismatch):
        weyl_rescale([0.5, 0.2], "markov", 2)
    with pytest.raises(KindMismatch):
        weyl_rescale([-0.1, -1.0], "neumann", 2)
    with pytest.raises(KindMismatch):
        weyl_rescale([0.1, -1.0], "dirichlet", 2)


def test_markov_skips_nonpositive():
    with pytest.warns(RuntimeWarning):
        rs = weyl_rescale([1.0, 0.9, -0.2, 0.5], "markov", 1)
    assert rs.skipped == [3]
    assert list(rs.r) == [2, 4]
    # drops only between consecutive r
    assert rs.drops == []


def test_largest_drops_respects_r_max():
    lam = np.exp(-np.array([0.0, 0.1, 1.0, 1.1, 1.2, 5.0]))
    rs = weyl_rescale(lam, "markov", 2)
    assert rs.largest_drops(1) == [5]
    assert 5 not in rs.largest_drops(3, r_max=5)


def test_drop_rank_scale_invariant():
    rng = np.random.default_rng(3)
    lam = -np.sort(rng.uniform(0, 10, 12))
    lam[0] = 0.0
    lam = -np.sort(-lam)
    a = weyl_rescale(lam, "neumann", 2).largest_drops(3)
    b = weyl_rescale(7.5 * lam, "neumann", 2).largest_drops(3)
    assert a == b


def test_min_value_profile():
    m, total = min_value_profile(np.array([[1.0, 0.0], [0.0, 1.0], [0.3, 0.2]]))
    assert total == 0.0 and list(m) == [0.0, 0.0]
    S = np.array([[1.0, 1.0, 1.0, 1.0], [0.0, 0.0, -0.02, -0.05]])
    assert min_value_profile(S)[1] == pytest.approx(0.07)


def indicator_fixture(rng, blocks=3, size=12, extra=3):
    p = blocks * size
    ind = np.zeros((p, blocks))
    for b in range(blocks):
        ind[b * size:(b + 1) * size, b] = 1.0
    x = np.arange(p)
    osc = np.column_stack([np.cos(np.pi * (k + 1) * (x + 0.5) / size) for k in range(extra)])
    Q, _ = np.linalg.qr(np.column_stack([ind, osc]))
    # mix within the indicator span so the input is not already sparse
    Q[:, :blocks] = Q[:, :blocks] @ np.linalg.qr(rng.standard_normal((blocks, blocks)))[0]
    return Q


def test_scan_indicator_fixture(rng):
    V = indicator_fixture(rng)
    table = scan(V, 6, threads=2)
    for k in range(1, 4):
        assert table.minval[3, k] == 0.0
        # the leading two columns already span two nonnegative sparse vectors,
        # and ties go to the smallest r
        assert table.r_min_of_k[k] == (2 if k < 3 else 3)
    assert select_kr(table)[0] == (1, 2)


def test_scan_invariants(rng):
    V = random_orthonormal(rng, 40, 6)
    table = scan(EigenBasis(V), 6, threads=1)
    assert table.rs == [2, 3, 4, 5, 6]
    for r in table.rs:
        vals = [table.minval[r, k] for k in range(1, r + 1)]
        assert np.all(np.diff(vals) >= 0) and vals[0] >= 0
    for k, r in table.optimal_pairs:
        assert r >= k
    assert sorted(table.r_min_of_k) == list(range(1, 7))


def test_scan_r_max_two(rng):
    table = scan(random_orthonormal(rng, 10, 2), 2)
    assert table.rs == [2]
    with pytest.raises(ValueError):
        scan(random_orthonormal(rng, 10, 2), 3)


def test_scan_threads_do_not_change_results(rng):
    V = random_orthonormal(rng, 30, 5)
    a = scan(V, 5, threads=1).rows()
    b = scan(V, 5, threads=4).rows()
    assert a == b


def test_scan_tie_goes_to_smallest_r():
    from types import SimpleNamespace

    from seba.heuristics import _tabulate

    runs = {2: SimpleNamespace(m=np.array([0.0, 0.0])),
            3: SimpleNamespace(m=np.array([0.0, 0.0, -0.1]))}
    minval, rmin, pairs = _tabulate(runs, 3)
    assert rmin == {1: 2, 2: 2, 3: 3}
    assert pairs == [(1, 2), (2, 2), (3, 3)]
    assert str(minval[2, 1]) == "0.0"


def test_select_kr_strips():
    assert select_kr([(k, 30) for k in range(5, 10)]) == [(5, 30)]
    pairs = [(k, 30) for k in range(1, 8)] + [(k, 38) for k in range(8, 12)]
    assert select_kr(pairs) == [(1, 30), (8, 38)]
    assert select_kr([(1, 2), (2, 3), (3, 4)]) == [(1, 2), (2, 3), (3, 4)]
    with pytest.raises(EmptyTable):
        select_kr([])


def test_select_kr_nonconsecutive_same_r():
    # the same r in two separate runs counts as two strips
    assert select_kr([(1, 5), (2, 6), (3, 5)]) == [(1, 5), (3, 5), (2, 6)]


def test_scan_records_failures(monkeypatch, rng):
    from seba import heuristics
    from seba.basis import DegenerateColumn

    real = heuristics.seba

    def flaky(basis, cfg):
        if basis.r == 3:
            raise DegenerateColumn("boom")
        return real(basis, cfg)

    monkeypatch.setattr(heuristics, "seba", flaky)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = scan(random_orthonormal(rng, 20, 4), 4, threads=1)
    assert table.failed == [3]
    assert 3 not in table.rs
    assert any("r=3" in str(w.message) for w in caught)
