import math

import numpy as np
import pytest
from scipy import stats as sps

from treecover import branching, oracles
from treecover.rng import stream
from treecover.tree import TreeKind, TreeShape, VertexRef, meet_depth

KINDS = [TreeKind.REGULAR, TreeKind.UNARY_ROOT]


def _fields(kind, n, t, m, name):
    shape = TreeShape(kind, n)
    rng = stream(0, name)
    return shape, np.array([branching.sample_field(shape, t, rng) for _ in range(m)])


@pytest.mark.parametrize("kind", KINDS)
def test_mean_preserved_and_leaf_variance(kind):
    n, t, m = 4, 2.0, 20000
    shape, f = _fields(kind, n, t, m, "bmean")
    leaves = f[:, shape.leaves()]
    se = math.sqrt(oracles.leaf_local_time_variance(n, t) / m)
    assert abs(leaves[:, 0].mean() - t) < 4 * se
    var = leaves[:, 0].var(ddof=1)
    assert abs(var / oracles.leaf_local_time_variance(n, t) - 1) < 0.1


def test_leaf_covariance_by_meet_depth():
    n, t, m = 3, 2.0, 40000
    shape, f = _fields(TreeKind.REGULAR, n, t, m, "bcov")
    leaves = f[:, shape.leaves()]
    target = oracles.exact_moments(n, t)["cov"]
    x = leaves - t
    for j in (1, 2, 4):
        d = int(meet_depth(0, j, n))
        prod = x[:, 0] * x[:, j]
        se = prod.std(ddof=1) / math.sqrt(m)
        assert abs(prod.mean() - target[d]) < 5 * se


def test_zero_time_gives_zero_field():
    shape = TreeShape(TreeKind.REGULAR, 5)
    assert not branching.sample_field(shape, 0.0, stream(0, "z")).any()
    with pytest.raises(ValueError):
        branching.sample_field(shape, -1.0, stream(0, "z"))


def test_branch_matches_field_marginal():
    n, t, m = 5, 3.0, 5000
    shape, f = _fields(TreeKind.REGULAR, n, t, m, "bbranch")
    b = branching.sample_branch(t, n, stream(1, "bbranch"), size=m)
    assert b.shape == (m, n + 1)
    assert np.all(b[:, 0] == t)
    assert sps.ks_2samp(b[:, n], f[:, shape.leaves().start]).pvalue > 1e-3
    assert branching.sample_branch(t, n, stream(1, "one")).shape == (n + 1,)


def test_path_union():
    kind = TreeKind.REGULAR
    leaves = [VertexRef(kind, 3, 0), VertexRef(kind, 3, 1)]
    verts = branching.path_union(leaves)
    assert len(verts) == 5
    assert verts[0].depth == 0
    assert branching.path_union([]) == []


def test_sample_paths_joint_law():
    kind, n, t, m = TreeKind.REGULAR, 4, 2.0, 20000
    shape = TreeShape(kind, n)
    leaves = [VertexRef(kind, n, 0), VertexRef(kind, n, 1)]
    verts, x = branching.sample_paths(shape, leaves, t, stream(2, "paths"), m)
    cols = [verts.index(v) for v in leaves]
    c = np.cov(x[:, cols[0]], x[:, cols[1]])[0, 1]
    assert abs(c / (2 * (n - 1) * t) - 1) < 0.1
    with pytest.raises(ValueError):
        branching.sample_paths(shape, [VertexRef(kind, n + 1, 0)], t, stream(2, "paths"), 1)


@pytest.mark.parametrize("kind", KINDS)
def test_tau_field_crosses(kind):
    shape = TreeShape(kind, 6)
    k, s = 3, 50.0
    for i in range(20):
        values, tau, exc = branching.sample_tau_field(shape, k, s, stream(i, "tau"))
        assert 2 * values[shape.level(k)].sum() > s
        assert values[0] == tau and exc >= 1
        assert not values[shape.level(k + 1).start:].any()
    with pytest.raises(ValueError):
        branching.sample_tau_field(shape, 0, s, stream(0, "tau"))
