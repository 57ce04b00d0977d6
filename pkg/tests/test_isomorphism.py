import math

import numpy as np
import pytest

from treecover import isomorphism as iso
from treecover import oracles
from treecover.rng import stream


@pytest.mark.parametrize("n,t", [(1, 1.0), (3, 4.0)])
def test_rhs_moments_match_oracle(n, t):
    x = iso.iso_rhs_sample(n, t, stream(0, "rhs"), 50000)
    mean, var = oracles.iso_leaf_moments(n, t)
    assert x.shape == (50000, 1 << (n - 1))
    assert abs(x[:, 0].mean() - mean) < 4 * math.sqrt(var / 50000)
    assert x[:, 0].var() == pytest.approx(var, rel=0.05)


@pytest.mark.parametrize("n,t", [(2, 1.0), (3, 4.0)])
def test_lhs_mean_matches_oracle(n, t):
    x = iso.iso_lhs_batch(n, t, 20000, seed=1)
    mean, var = oracles.iso_leaf_moments(n, t)
    for i in range(x.shape[1]):
        assert abs(x[:, i].mean() - mean) < 4 * math.sqrt(var / 20000)


def test_single_samples():
    s = iso.iso_lhs_sample(3, 2.0, seed=2)
    assert s.L.shape == s.h.shape == (4,)
    np.testing.assert_allclose(s.lhs, s.L + s.h**2)
    assert iso.iso_rhs_sample(3, 2.0, stream(2, "r")).shape == (4,)
    with pytest.raises(ValueError):
        iso.iso_lhs_sample(3, -1.0, seed=0)
    with pytest.raises(ValueError):
        iso.iso_rhs_sample(3, -1.0, stream(0, "r"))


def test_distribution_test_small():
    rep = iso.iso_distribution_test(2, 1.0, 5000, seed=3)
    assert rep.passed
    names = [t.name for t in rep.tests]
    assert "marginal_ks_leaf0" in names and "second_moment_0_1" in names
    with pytest.raises(ValueError):
        iso.iso_distribution_test(2, 1.0, 5, seed=3)


def test_sublevel_sets():
    s = iso.sublevel(np.array([0.0, 2.0, 1.0, 5.0]), 1.0)
    assert s.members.tolist() == [0, 2] and len(s) == 2
    with pytest.raises(ValueError):
        iso.sublevel([1.0], -1.0)
    n = 10
    h = -iso.centering(n).m_n * np.ones(4)
    assert len(iso.g_set(n, h, 0.0)) == 4
    sizes = iso.g_set_sizes(8, 1.0, 50, stream(4, "g"))
    assert sizes.shape == (50,) and np.all(sizes >= 0)
