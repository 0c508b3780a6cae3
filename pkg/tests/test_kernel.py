"""Interaction-kernel construction and the local frequency helpers."""

import numpy as np
import pytest

from ipsd.kernel import (Kernel, complete_kernel, config_all, config_bernoulli,
                         config_indicator, explicit_kernel, frequency_of_ones,
                         local_frequency, torus_kernel)


def test_torus_d1_neighbors():
    k = torus_kernel(1, 4)
    assert k.n == 4
    nbrs = dict(zip(*k.out_edges(0)))
    assert nbrs == {1: 0.5, 3: 0.5}
    assert k.q(0, 1) == 0.5 and k.q(0, 2) == 0.0


def test_torus_row_sums_and_trace():
    for d, L in [(1, 3), (1, 8), (2, 3), (2, 4), (3, 3)]:
        k = torus_kernel(d, L)
        dense = k.dense()
        assert np.allclose(dense.sum(axis=1), 1.0)
        assert np.all(np.diag(dense) == 0.0)
        # symmetric: q(x,y) == q(y,x)
        assert np.array_equal(dense, dense.T)


def test_torus_l2_collapses_antipodal_neighbors():
    # On L=2 the +1 and -1 steps reach the same site, so the two weights of
    # 1/(2d) merge into a single edge of weight 1/d.
    k = torus_kernel(2, 2)
    sites, weights = k.out_edges(0)
    assert sorted(sites) == [1, 2]
    assert np.allclose(weights, 0.5)


def test_torus_d2_neighbor_set():
    k = torus_kernel(2, 3)  # row-major: site = x0*3 + x1
    nbrs = dict(zip(*k.out_edges(4)))  # site 4 = (1,1), interior
    assert nbrs == {1: 0.25, 7: 0.25, 3: 0.25, 5: 0.25}


def test_complete_kernel_uniform():
    k = complete_kernel(5)
    dense = k.dense()
    off = dense[~np.eye(5, dtype=bool)]
    assert np.allclose(off, 0.25)


def test_complete_kernel_frequency_oracle():
    # From site 4's viewpoint the others are {0,1,2,3} with weight 1/4 each;
    # occupying {0,1} gives a local 1-frequency of exactly 2/4.
    k = complete_kernel(5)
    eta = config_indicator(5, [0, 1])
    assert local_frequency(k, eta, 4, 1) == 0.5
    assert local_frequency(k, eta, 4, 0) == 0.5


def test_local_frequencies_sum_to_one():
    k = torus_kernel(2, 4)
    rng = np.random.default_rng(0)
    eta = config_bernoulli(k.n, 0.5, rng)
    for x in range(k.n):
        assert local_frequency(k, eta, x, 0) + local_frequency(k, eta, x, 1) == pytest.approx(1.0)


def test_frequency_of_ones_matches_scalar_helper():
    k = torus_kernel(1, 6)
    eta = config_indicator(6, [0, 2, 3])
    f1 = frequency_of_ones(k, eta)
    expect = [local_frequency(k, eta, x, 1) for x in range(6)]
    assert np.allclose(f1, expect)
    # hand value: site 1 has neighbors {0,2}, both occupied
    assert f1[1] == 1.0
    # site 5 has neighbors {4,0}: only 0 occupied
    assert f1[5] == 0.5


def test_explicit_kernel_roundtrip():
    edges = [(0, 1, 0.5), (0, 2, 0.5), (1, 0, 1.0), (2, 0, 1.0)]
    k = explicit_kernel(3, edges)
    assert k.q(0, 1) == 0.5 and k.q(1, 0) == 1.0
    assert np.allclose(k.dense().sum(axis=1), 1.0)


def test_explicit_kernel_validation():
    with pytest.raises(ValueError):  # row sums off
        explicit_kernel(2, [(0, 1, 0.5), (1, 0, 1.0)])
    with pytest.raises(ValueError):  # self loop
        explicit_kernel(2, [(0, 0, 1.0), (1, 0, 1.0)])
    with pytest.raises(ValueError):  # not strongly connected (1 unreachable from 2)
        explicit_kernel(3, [(0, 1, 1.0), (1, 0, 1.0), (2, 0, 1.0)])
    with pytest.raises(ValueError):  # duplicate edge
        explicit_kernel(2, [(0, 1, 0.5), (0, 1, 0.5), (1, 0, 1.0)])
    with pytest.raises(ValueError):  # nonpositive weight
        explicit_kernel(2, [(0, 1, 0.0), (1, 0, 1.0)])


def test_in_edges_transpose():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]  # directed 3-cycle
    k = explicit_kernel(3, edges)
    sites, weights = k.in_edges(2)
    assert list(sites) == [1] and list(weights) == [1.0]


def test_config_helpers():
    assert np.array_equal(config_all(3, 1), [1, 1, 1])
    assert np.array_equal(config_all(3, 0), [0, 0, 0])
    assert np.array_equal(config_indicator(4, [1, 3]), [0, 1, 0, 1])
    rng = np.random.default_rng(1)
    eta = config_bernoulli(10_000, 0.25, rng)
    assert eta.dtype == np.uint8
    assert abs(eta.mean() - 0.25) < 0.02
    assert np.array_equal(config_bernoulli(5, 0.0, rng), np.zeros(5))
    assert np.array_equal(config_bernoulli(5, 1.0, rng), np.ones(5))


def test_config_indicator_validation():
    with pytest.raises(ValueError):
        config_indicator(4, [4])
    with pytest.raises(ValueError):
        config_indicator(4, [-1])


def test_dense_guard():
    k = torus_kernel(1, 3)
    assert isinstance(k, Kernel)
    big = torus_kernel(2, 10)  # 100 sites: dense() refuses
    with pytest.raises(ValueError):
        big.dense()
