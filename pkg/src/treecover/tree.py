"""Geometry of finite binary trees.

Two shapes are supported. The regular tree ``T_n`` has a root of degree 2 and
``2**d`` vertices at depth ``d``. The unary-root tree ``Tbar_n`` has a root with a
single child, after which every vertex branches in two, so depth ``d >= 1``
holds ``2**(d-1)`` vertices.

A vertex is addressed by ``(depth, index)`` where the binary digits of
``index`` spell the left/right choices along the path from the root. In the
unary-root tree the forced first step carries no bit. Ancestors are therefore
bit shifts and no per-vertex storage is needed.

Flat arrays of per-vertex quantities use the heap layout
``offset(depth) + index``; see :func:`offset`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MAX_DEPTH = 30


class TreeKind(enum.Enum):
    REGULAR = "regular"
    UNARY_ROOT = "unary_root"


def width(kind: TreeKind, depth: int) -> int:
    """Number of vertices at ``depth``."""
    if depth < 0:
        raise ValueError(f"negative depth {depth}")
    if kind is TreeKind.REGULAR:
        return 1 << depth
    return 1 << max(depth - 1, 0)


def offset(kind: TreeKind, depth: int) -> int:
    """Position of the first depth-``depth`` vertex in the flat heap layout."""
    if kind is TreeKind.REGULAR:
        return (1 << depth) - 1
    return 0 if depth == 0 else 1 << (depth - 1)


@dataclass(frozen=True)
class TreeShape:
    kind: TreeKind
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DEPTH:
            raise ValueError(f"depth n must lie in [1, {MAX_DEPTH}], got {self.n}")

    @property
    def unary(self) -> bool:
        return self.kind is TreeKind.UNARY_ROOT

    @property
    def vertex_count(self) -> int:
        return offset(self.kind, self.n + 1)

    @property
    def leaf_count(self) -> int:
        return width(self.kind, self.n)

    def width(self, depth: int) -> int:
        return width(self.kind, depth)

    def offset(self, depth: int) -> int:
        return offset(self.kind, depth)

    def level(self, depth: int) -> slice:
        """Slice of a flat per-vertex array holding depth ``depth``."""
        if not 0 <= depth <= self.n:
            raise IndexError(f"depth {depth} outside [0, {self.n}]")
        start = offset(self.kind, depth)
        return slice(start, start + width(self.kind, depth))

    def leaves(self) -> slice:
        return self.level(self.n)

    def root(self) -> "VertexRef":
        return VertexRef(self.kind, 0, 0)

    def depths(self) -> np.ndarray:
        """Depth of every vertex in flat order."""
        return np.repeat(np.arange(self.n + 1), [width(self.kind, d) for d in range(self.n + 1)])

    def parents(self) -> np.ndarray:
        """Flat parent id of every vertex; the root maps to -1."""
        par = np.full(self.vertex_count, -1, dtype=np.int64)
        for d in range(1, self.n + 1):
            idx = np.arange(width(self.kind, d))
            up = idx >> 1 if (d > 1 or not self.unary) else np.zeros_like(idx)
            par[self.level(d)] = offset(self.kind, d - 1) + up
        return par


@dataclass(frozen=True, order=True)
class VertexRef:
    kind: TreeKind
    depth: int
    index: int

    def __post_init__(self):
        if self.depth < 0 or self.depth > MAX_DEPTH:
            raise ValueError(f"depth {self.depth} outside [0, {MAX_DEPTH}]")
        if not 0 <= self.index < width(self.kind, self.depth):
            raise ValueError(f"index {self.index} outside depth-{self.depth} width")

    @property
    def flat(self) -> int:
        return offset(self.kind, self.depth) + self.index

    def parent(self) -> "VertexRef":
        if self.depth == 0:
            raise ValueError("the root has no parent")
        return ancestor(self, self.depth - 1)

    def child(self, i: int) -> "VertexRef":
        if self.kind is TreeKind.UNARY_ROOT and self.depth == 0:
            if i != 0:
                raise ValueError("the unary root has a single child 0")
            return VertexRef(self.kind, 1, 0)
        if i not in (0, 1):
            raise ValueError("child index must be 0 or 1")
        return VertexRef(self.kind, self.depth + 1, 2 * self.index + i)


def path_bits(kind: TreeKind, depth: int) -> int:
    # number of index bits carried by a depth-`depth` vertex
    return depth if kind is TreeKind.REGULAR else max(depth - 1, 0)


def ancestor(v: VertexRef, k: int) -> VertexRef:
    """Ancestor ``[v]_k`` of ``v`` at depth ``k``."""
    if not 0 <= k <= v.depth:
        raise IndexError(f"ancestor depth {k} outside [0, {v.depth}]")
    shift = path_bits(v.kind, v.depth) - path_bits(v.kind, k)
    return VertexRef(v.kind, k, v.index >> shift)


def meet(x: VertexRef, y: VertexRef) -> VertexRef:
    """Deepest common ancestor ``x ^ y``."""
    if x.kind is not y.kind:
        raise TypeError("vertices belong to different tree kinds")
    d = min(x.depth, y.depth)
    a, b = ancestor(x, d).index, ancestor(y, d).index
    # in the unary-root tree the index has d-1 bits, so this never reaches 0 for d >= 1
    k = d - (a ^ b).bit_length()
    return ancestor(x, k)


def subtree_leaves(y: VertexRef, r: int, shape: TreeShape, side: int | None = None) -> list[VertexRef]:
    """Descendants of ``y`` at distance ``r``.

    With ``side=None`` all ``2**r`` descendants are returned (fewer below the
    unary root). ``side`` in ``{0, 1}`` keeps only the one-sided subtree hanging
    from child ``side`` of ``y``, with ``2**(r-1)`` members.
    """
    if y.kind is not shape.kind:
        raise TypeError("vertex and shape kinds differ")
    if r < 0 or y.depth + r > shape.n:
        raise IndexError(f"depth {y.depth + r} exceeds tree depth {shape.n}")
    d = y.depth + r
    lo, hi = descendant_range(y, d)
    if side is not None:
        if r < 1:
            raise ValueError("a one-sided subtree needs r >= 1")
        if y.kind is TreeKind.UNARY_ROOT and y.depth == 0:
            if side != 0:
                raise ValueError("the unary root has no right subtree")
        else:
            half = (hi - lo) // 2
            lo, hi = (lo, lo + half) if side == 0 else (lo + half, hi)
    return [VertexRef(y.kind, d, i) for i in range(lo, hi)]


def descendant_range(y: VertexRef, d: int) -> tuple[int, int]:
    """Half-open index range of the depth-``d`` descendants of ``y``."""
    shift = path_bits(y.kind, d) - path_bits(y.kind, y.depth)
    if shift < 0:
        raise IndexError("target depth above the vertex")
    return y.index << shift, (y.index + 1) << shift


def degree(v: VertexRef, shape: TreeShape) -> int:
    if v.depth == shape.n:
        return 1
    if v.depth == 0:
        return 1 if shape.unary else 2
    return 3


def ancestor_index(index: np.ndarray | int, depth: int, k: int, kind: TreeKind):
    """Vectorised ancestor index for depth-``depth`` indices."""
    return np.asarray(index) >> (path_bits(kind, depth) - path_bits(kind, k))


def meet_depth(i: np.ndarray | int, j: np.ndarray | int, depth: int):
    """Vectorised meet depth of two vertices both at ``depth`` (either kind)."""
    diff = np.asarray(i, dtype=np.int64) ^ np.asarray(j, dtype=np.int64)
    # integer bit length via frexp: diff = m * 2**e with 0.5 <= m < 1
    bl = np.frexp(diff.astype(np.float64))[1]
    return depth - bl
