import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treecover.tree import (TreeKind, TreeShape, VertexRef, ancestor, degree, descendant_range, meet, meet_depth,
                            offset, subtree_leaves, width)

KINDS = [TreeKind.REGULAR, TreeKind.UNARY_ROOT]
R, U = TreeKind.REGULAR, TreeKind.UNARY_ROOT


@st.composite
def vertex(draw, kind=None, max_depth=12):
    kind = draw(st.sampled_from(KINDS)) if kind is None else kind
    d = draw(st.integers(0, max_depth))
    return VertexRef(kind, d, draw(st.integers(0, width(kind, d) - 1)))


@st.composite
def vertex_pair(draw):
    kind = draw(st.sampled_from(KINDS))
    return draw(vertex(kind)), draw(vertex(kind))


def test_widths_and_offsets():
    assert [width(R, d) for d in range(4)] == [1, 2, 4, 8]
    assert [width(U, d) for d in range(4)] == [1, 1, 2, 4]
    for kind in KINDS:
        shape = TreeShape(kind, 7)
        assert shape.vertex_count == sum(width(kind, d) for d in range(8))
        assert shape.leaf_count == width(kind, 7)
        for d in range(7):
            assert offset(kind, d + 1) == offset(kind, d) + width(kind, d)


def test_shape_bounds():
    with pytest.raises(ValueError):
        TreeShape(R, 0)
    with pytest.raises(ValueError):
        TreeShape(R, 31)
    with pytest.raises(IndexError):
        TreeShape(R, 3).level(4)


def test_ancestor_examples():
    assert ancestor(VertexRef(R, 5, 13), 5) == VertexRef(R, 5, 13)
    assert ancestor(VertexRef(R, 3, 6), 1) == VertexRef(R, 1, 1)
    assert ancestor(VertexRef(U, 4, 5), 0) == VertexRef(U, 0, 0)
    with pytest.raises(IndexError):
        ancestor(VertexRef(R, 2, 1), 3)


def test_meet_examples():
    x = VertexRef(R, 4, 9)
    assert meet(x, x) == x
    assert meet(VertexRef(R, 2, 0), VertexRef(R, 2, 1)) == VertexRef(R, 1, 0)
    assert meet(VertexRef(R, 2, 0), VertexRef(R, 2, 3)) == VertexRef(R, 0, 0)
    assert meet(VertexRef(U, 3, 0), VertexRef(U, 3, 3)) == VertexRef(U, 1, 0)
    with pytest.raises(TypeError):
        meet(VertexRef(R, 1, 0), VertexRef(U, 1, 0))


def test_subtree_leaves_examples():
    shape = TreeShape(R, 4)
    assert len(subtree_leaves(shape.root(), 2, shape)) == 4
    y = VertexRef(R, 2, 3)
    assert subtree_leaves(y, 0, shape) == [y]
    z = VertexRef(R, 3, 5)
    assert subtree_leaves(z, 1, shape) == [z.child(0), z.child(1)]
    assert subtree_leaves(VertexRef(R, 1, 1), 2, shape, side=1) == [VertexRef(R, 3, 6), VertexRef(R, 3, 7)]
    with pytest.raises(IndexError):
        subtree_leaves(z, 2, shape)
    ushape = TreeShape(U, 4)
    assert len(subtree_leaves(ushape.root(), 3, ushape, side=0)) == 4


def test_degree_examples():
    for kind, root_deg in ((R, 2), (U, 1)):
        shape = TreeShape(kind, 5)
        assert degree(shape.root(), shape) == root_deg
        assert degree(VertexRef(kind, 3, 0), shape) == 3
        assert degree(VertexRef(kind, 5, 0), shape) == 1


@pytest.mark.parametrize("kind", KINDS)
def test_degree_sum_counts_edges(kind):
    shape = TreeShape(kind, 6)
    total = sum(degree(VertexRef(kind, d, i), shape) for d in range(7) for i in range(width(kind, d)))
    assert total == 2 * (shape.vertex_count - 1)


@given(vertex())
def test_child_parent_roundtrip(v):
    kids = [0] if (v.kind is U and v.depth == 0) else [0, 1]
    for i in kids:
        assert v.child(i).parent() == v


@given(vertex())
def test_ancestor_chain(v):
    assert ancestor(v, v.depth) == v
    assert ancestor(v, 0).depth == 0
    for k in range(1, v.depth + 1):
        assert ancestor(v, k).parent() == ancestor(v, k - 1)


@given(vertex_pair())
def test_meet_is_deepest_common_ancestor(pair):
    x, y = pair
    m = meet(x, y)
    assert m == meet(y, x)
    for k in range(m.depth + 1):
        assert ancestor(x, k) == ancestor(y, k) == ancestor(m, k)
    if m.depth < min(x.depth, y.depth):
        assert ancestor(x, m.depth + 1) != ancestor(y, m.depth + 1)


@given(vertex_pair())
def test_meet_depth_vectorised_matches(pair):
    x, y = pair
    d = min(x.depth, y.depth)
    a, b = ancestor(x, d), ancestor(y, d)
    assert meet_depth(a.index, b.index, d) == meet(a, b).depth


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", range(1, 7))
def test_graph_distance_exhaustive(kind, n):
    shape = TreeShape(kind, n)
    par = shape.parents()
    base = offset(kind, n)

    def path(v):
        out = [v]
        while par[out[-1]] >= 0:
            out.append(int(par[out[-1]]))
        return out

    for i, j in itertools.combinations(range(shape.leaf_count), 2):
        pi, pj = path(base + i), set(path(base + j))
        up = next(k for k, v in enumerate(pi) if v in pj)
        dist = up + path(base + j).index(pi[up])
        assert dist == 2 * (n - meet(VertexRef(kind, n, i), VertexRef(kind, n, j)).depth)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("d", [0, 1, 3])
def test_subtrees_partition_leaves(kind, d):
    shape = TreeShape(kind, 6)
    seen = []
    for i in range(width(kind, d)):
        y = VertexRef(kind, d, i)
        seen += [v.index for v in subtree_leaves(y, 6 - d, shape)]
        lo, hi = descendant_range(y, 6)
        assert hi - lo == len(subtree_leaves(y, 6 - d, shape))
    assert sorted(seen) == list(range(shape.leaf_count))


@pytest.mark.parametrize("kind", KINDS)
def test_flat_layout_matches_refs(kind):
    shape = TreeShape(kind, 5)
    par = shape.parents()
    depths = shape.depths()
    for d in range(1, 6):
        for i in range(width(kind, d)):
            v = VertexRef(kind, d, i)
            assert par[v.flat] == v.parent().flat
            assert depths[v.flat] == d
    assert par[0] == -1
    assert np.all(np.diff(depths) >= 0)
