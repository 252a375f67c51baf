import numpy as np
import pytest

from oracles import divergence_fd, path_graph_points
from seba.basis import seba
from seba.dynamics import (BickleyFlow, Disconnected, UlamOperator, bickley_basis,
                           bickley_field, block_markov_demo, block_markov_matrix,
                           disk_with_blobs, flow_map, graph_laplacian, graph_laplacian_demo,
                           normalized_operator, singular_basis, ulam_build)
from seba.thresholding import disjoint_support


def test_bickley_units():
    f = BickleyFlow()
    assert f.U0 == pytest.approx(5.413824)
    assert f.k[0] == pytest.approx(2 / 6.371)
    assert f.period == 20.0


def test_zero_amplitude_is_a_jet():
    f = BickleyFlow(A=(0.0, 0.0, 0.0))
    y = np.linspace(-3, 3, 7)
    u, v = f.velocity(np.full(7, 4.2), y, 13.0)
    assert np.allclose(u, f.U0 / np.cosh(y / f.L0) ** 2)
    assert np.all(v == 0)


def test_velocity_matches_stream_function():
    f = BickleyFlow()
    x, y, t, h = 3.3, 0.7, 11.0, 1e-6
    u, v = f.velocity(x, y, t)
    du = -(f.stream_function(x, y + h, t) - f.stream_function(x, y - h, t)) / (2 * h)
    dv = (f.stream_function(x + h, y, t) - f.stream_function(x - h, y, t)) / (2 * h)
    assert u == pytest.approx(du, rel=1e-7)
    assert v == pytest.approx(dv, rel=1e-6, abs=1e-9)


def test_harmonic_shortcut_matches_general_path():
    f = BickleyFlow()
    # any other wavenumber tuple takes the direct loop
    g = BickleyFlow(wavenumbers=(2.0, 4.0, 6.0 + 1e-15))
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0, 20, 50), rng.uniform(-3, 3, 50)
    assert np.allclose(f.velocity(x, y, 7.5), g.velocity(x, y, 7.5), atol=1e-12)


def test_symmetry_and_periodicity():
    f = BickleyFlow()
    u1, v1 = f.velocity(2.0, 1.1, 5.0)
    u2, v2 = f.velocity(2.0, -1.1, 5.0)
    # the wave part of psi is even in y, so v is too
    assert v1 == pytest.approx(v2)
    # k = 2 / r_e is not exactly 2 pi / 20, so periodicity comes from reducing x
    p1 = f.periodic_velocity(2.0, 1.1, 5.0)
    p2 = f.periodic_velocity(22.0, 1.1, 5.0)
    assert p1 == pytest.approx(p2, rel=1e-12)
    assert p1 == pytest.approx((u1, v1), rel=1e-12)


def test_divergence_free():
    f = BickleyFlow()
    for x, y, t in [(1.0, 0.5, 0.0), (13.0, -2.0, 20.0), (7.7, 0.0, 39.0)]:
        assert abs(divergence_fd(f.velocity, x, y, t)) <= 1e-10 * f.U0 / f.L0 * 1e3


def test_flow_map_zero_field():
    pts = np.array([[0.1, 0.2], [3.0, -1.0]])
    out = flow_map(lambda x, y, t: (0 * x, 0 * y), pts, 0.0, 5.0, 0.3)
    assert np.array_equal(out, pts)


def test_flow_map_rotation():
    pts = np.array([[1.0, 0.0], [0.0, 2.0]])
    out = flow_map(lambda x, y, t: (-y, x), pts, 0.0, np.pi / 2, 1e-3)
    assert np.allclose(out, [[0.0, 1.0], [-2.0, 0.0]], atol=1e-6)


def test_flow_map_fourth_order():
    pts = np.array([[1.0, 0.0]])
    exact = np.array([[np.cos(2.0), np.sin(2.0)]])

    def err(h):
        return np.abs(flow_map(lambda x, y, t: (-y, x), pts, 0.0, 2.0, h) - exact).max()

    ratio = err(0.1) / err(0.05)
    assert 14 < ratio < 18


def test_flow_map_periodic_wrap():
    pts = np.array([[19.5, 0.0]])
    out = flow_map(lambda x, y, t: (np.ones_like(x), 0 * y), pts, 0.0, 1.0, 0.25,
                   period_x=20.0)
    assert out[0, 0] == pytest.approx(0.5)
    raw = flow_map(lambda x, y, t: (np.ones_like(x), 0 * y), pts, 0.0, 1.0, 0.25,
                   period_x=20.0, wrap=False)
    assert raw[0, 0] == pytest.approx(20.5)


def test_flow_map_validation():
    with pytest.raises(ValueError):
        flow_map(lambda x, y, t: (x, y), np.zeros((2, 2)), 0, 1, 0.0)
    with pytest.raises(ValueError):
        flow_map(lambda x, y, t: (x, y), np.zeros((2, 3)), 0, 1, 0.1)


def test_ulam_identity_flow():
    op = ulam_build(velocity=lambda x, y, t: (0 * x, 0 * y), nx=4, ny=3, t0=0, t1=1,
                    samples_per_box=5, x_range=(0, 4), y_range=(0, 3))
    assert np.array_equal(op.P, np.eye(12))
    assert np.allclose(op.L, np.eye(12))
    assert np.allclose(op.P.sum(axis=1), 1.0)


def test_ulam_two_box_swap():
    # constant shift by one box width on a two-box periodic strip
    op = ulam_build(velocity=lambda x, y, t: (np.ones_like(x), 0 * y), nx=2, ny=1, t0=0,
                    t1=1, samples_per_box=20, x_range=(0, 2), y_range=(0, 1), step=0.5)
    assert np.array_equal(op.P, [[0, 1], [1, 0]])
    sigma, _ = singular_basis(op.L, 2)
    assert np.allclose(sigma, [1, 1])


def test_ulam_rows_stochastic_and_threads():
    kw = dict(nx=10, ny=4, samples_per_box=8, step=1.0, seed=3)
    a = ulam_build(threads=1, **kw)
    b = ulam_build(threads=3, **kw)
    assert np.allclose(a.P.sum(axis=1), 1.0)
    assert np.array_equal(a.P, b.P)
    sigma, U = singular_basis(a.L, 3)
    assert sigma[0] == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(np.abs(U[:, 0]), 1 / np.sqrt(40), atol=1e-8)
    assert a.box_centers().shape == (40, 2)


def test_normalized_operator_leading_pair():
    P, _ = block_markov_matrix([5, 7], 0.1, seed=2)
    L = normalized_operator(P)
    sigma, U = singular_basis(L, 2)
    assert sigma[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.abs(U[:, 0]), 1 / np.sqrt(12))


def test_path_graph_spectrum():
    B = graph_laplacian_demo(path_graph_points(3), 1.0)
    assert np.allclose(B.eigenvalues, [0, -1, -3])
    assert B.kind == "laplace_neumann"


def test_complete_graph_spectrum():
    n = 5
    pts = np.column_stack([np.cos(2 * np.pi * np.arange(n) / n),
                           np.sin(2 * np.pi * np.arange(n) / n)])
    L = graph_laplacian(pts, 10.0)
    assert np.array_equal(L, n * np.eye(n) - np.ones((n, n)))
    B = graph_laplacian_demo(pts, 10.0)
    assert np.allclose(B.eigenvalues, [0] + [-n] * (n - 1))


def test_disconnected_graph():
    with pytest.raises(Disconnected):
        graph_laplacian_demo(path_graph_points(4, spacing=2.0), 1.0)


def test_disk_with_blobs_labels():
    pts, labels = disk_with_blobs()
    assert set(labels) == {0, 1, 2, 3, 4}
    for b, c in zip(range(1, 5), [(1.45, 0), (0, 1.45), (-1.45, 0), (0, -1.45)]):
        assert np.allclose(pts[labels == b].mean(axis=0), c, atol=0.05)


@pytest.mark.slow
def test_blobs_seba():
    pts, labels = disk_with_blobs()
    B = graph_laplacian_demo(pts, 0.075, r=5)
    res = seba(B)
    assert np.all(res.m >= -0.05)
    means = np.array([[res.S[labels == b, j].mean() for b in range(5)] for j in range(5)])
    # one column for the disk, one for each blob
    owner = means.argmax(axis=1)
    assert sorted(owner) == [0, 1, 2, 3, 4]
    for j, b in enumerate(owner):
        others = np.delete(means[j], b)
        assert means[j, b] >= (0.9 if b else 0.5) and others.max() <= 0.05


def test_block_markov_zero_leak():
    B, labels = block_markov_demo([6, 4, 3], 0.0, seed=1)
    res = seba(B)
    assert np.all(res.m == 0)
    fa = disjoint_support(res)
    # each block maps to one column
    mapping = {lab: set(fa.a[labels == lab]) for lab in range(3)}
    assert all(len(v) == 1 for v in mapping.values())
    assert len(set.union(*mapping.values())) == 3
    assert res.metrics["subspace_error"] <= 1e-6


def test_block_markov_validation():
    with pytest.raises(ValueError):
        block_markov_matrix([3, 3], 0.6)
    with pytest.raises(ValueError):
        block_markov_matrix([3, 0], 0.1)
    P, labels = block_markov_matrix([3, 2], 0.2)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.allclose([P[i, labels == labels[i]].sum() for i in range(5)], 0.8)


def test_single_block_constant_vector():
    B, _ = block_markov_demo([7], 0.0, seed=0)
    assert np.allclose(np.abs(B.V[:, 0]), 1 / np.sqrt(7))


def test_bickley_field_small():
    flow = BickleyFlow(t_range=(0.0, 2.0))
    op = UlamOperator(8, 4, flow.x_range, flow.y_range, np.eye(32), 1)
    col = np.arange(32.0)
    g = bickley_field(col, op, flow, refine=2, step=0.5)
    assert g.values.shape == (8, 16)
    assert g.image_points.shape == (8, 16, 2)
    assert g.periodic_x and g.image_period_x == 20.0


@pytest.mark.slow
def test_bickley_basis_coarse():
    B, op = bickley_basis(r=4, nx=20, ny=6, samples_per_box=10, step=0.5)
    assert B.kind == "markov" and B.r == 4
    assert B.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(B.eigenvalues) <= 1e-12)
    assert op.n_boxes == 120
