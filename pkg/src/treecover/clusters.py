"""Clusters of rarely visited leaves and the trajectory classifiers built on them.

Leaves are handled as integer index arrays at depth ``n`` of a given shape.
Two leaves share an ``r``-cluster when they share their depth-``r`` ancestor;
the cluster's root depth is the depth of the deepest common ancestor of its
members. Band tests use closed intervals throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StateError
from .stats import SQRT_LOG2, centering
from .tree import TreeShape, VertexRef, path_bits, meet_depth
from .walk import LocalTimeField

DEFAULT_ETA = 0.25
DEFAULT_ETA_PRIME = 0.1


def r_n_of(n: int, eta: float = DEFAULT_ETA) -> int:
    """``floor(n^{1/2 - eta})``, at least 1."""
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    if n < 1:
        raise ValueError("n must be positive")
    return max(1, math.floor(n ** (0.5 - eta) + 1e-9))


def r_prime(n: int, eta_prime: float = DEFAULT_ETA_PRIME) -> int:
    """``ceil(n^{eta'})``."""
    return math.ceil(n**eta_prime - 1e-9)


def wedge(n: int, k):
    """``min(k, n - k)``."""
    return np.minimum(k, n - np.asarray(k))


def band(k, eta: float = DEFAULT_ETA) -> tuple[np.ndarray, np.ndarray]:
    """Closed window ``[k^{1/2 - eta}, k^{1/2 + eta}]``."""
    k = np.asarray(k, dtype=float)
    return k ** (0.5 - eta), k ** (0.5 + eta)


def linear_profile(n: int, k) -> np.ndarray:
    """``sqrt(log 2) (n - k)``."""
    return SQRT_LOG2 * (n - np.asarray(k, dtype=float))


# --- decomposition ---------------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    ancestor: VertexRef
    root_depth: int
    members: np.ndarray

    def __len__(self) -> int:
        return int(self.members.size)


@dataclass(frozen=True)
class ClusterDecomposition:
    shape: TreeShape
    r_n: int
    clusters: tuple
    u: float = math.nan

    def leaves(self) -> np.ndarray:
        if not self.clusters:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([c.members for c in self.clusters])

    def rooted_in(self, K) -> "ClusterDecomposition":
        """Only clusters whose root depth lies in ``K`` (the W-set restricted to ``K``)."""
        ks = set(int(k) for k in K)
        return ClusterDecomposition(self.shape, self.r_n, tuple(c for c in self.clusters if c.root_depth in ks), self.u)

    def W(self, K) -> np.ndarray:
        return self.rooted_in(K).leaves()

    def __len__(self) -> int:
        return len(self.clusters)


def _as_indices(leaves, shape: TreeShape) -> np.ndarray:
    if isinstance(leaves, np.ndarray):
        return np.unique(leaves.astype(np.int64))
    idx = []
    for v in leaves:
        if v.depth != shape.n or v.kind is not shape.kind:
            raise ValueError("all leaves must lie at depth n of the shape")
        idx.append(v.index)
    return np.unique(np.asarray(idx, dtype=np.int64))


def decompose(leaves, shape: TreeShape, r_n: int, u: float = math.nan) -> ClusterDecomposition:
    """Group leaves by their depth-``r_n`` ancestor and find each group's root depth."""
    if not 0 <= r_n <= shape.n:
        raise ValueError("r_n outside [0, n]")
    idx = _as_indices(leaves, shape)
    shift = path_bits(shape.kind, shape.n) - path_bits(shape.kind, r_n)
    anc = idx >> shift
    clusters = []
    if idx.size:
        cuts = np.flatnonzero(np.diff(anc)) + 1
        for grp in np.split(idx, cuts):
            k = int(meet_depth(grp[0], grp[-1], shape.n))
            a = VertexRef(shape.kind, r_n, int(grp[0] >> shift))
            clusters.append(Cluster(a, k, grp))
    return ClusterDecomposition(shape, r_n, tuple(clusters), u)


def count_ancestors(leaves: np.ndarray, shape: TreeShape, depth: int) -> int:
    """``|[A]_depth|`` for a leaf index set ``A``."""
    shift = path_bits(shape.kind, shape.n) - path_bits(shape.kind, depth)
    return int(np.unique(np.asarray(leaves, dtype=np.int64) >> shift).size)


def is_clustered(leaves, shape: TreeShape, r: int, R: int) -> bool:
    """True iff every pair of distinct leaves meets at depth ``>= R`` or ``< r``."""
    if r > R:
        raise ValueError("need r <= R")
    d = decompose(leaves, shape, r)
    return all(c.root_depth >= R for c in d.clusters)


# --- trajectory classification ---------------------------------------------

@dataclass(frozen=True)
class ClassifyParams:
    eta: float = DEFAULT_ETA
    eta_prime: float = DEFAULT_ETA_PRIME
    u: float = 0.0


@dataclass
class TrajectoryClass:
    """Per-leaf, per-depth flags for the leaves of ``F(u)``.

    Arrays indexed ``[leaf, j]`` refer to depth ``ks[j]``. ``window`` is
    ``[r_n, n - r_n]``; ``degenerate_window`` is set when it is empty.
    """

    n: int
    r_n: int
    params: ClassifyParams
    leaves: np.ndarray
    ks: np.ndarray
    sqrt_l: np.ndarray = field(repr=False)
    in_band_wedge: np.ndarray = field(repr=False)
    in_band_tail: np.ndarray = field(repr=False)
    up: np.ndarray = field(repr=False)
    low: np.ndarray = field(repr=False)
    above_o: np.ndarray = field(repr=False)
    root_depth: np.ndarray = field(repr=False)
    cluster_size: np.ndarray = field(repr=False)
    window: tuple = ()
    degenerate_window: bool = False

    def _cols(self, K) -> np.ndarray:
        K = set(int(k) for k in K)
        return np.array([j for j, k in enumerate(self.ks) if k in K], dtype=np.int64)

    def R(self, K) -> np.ndarray:
        """Leaves whose trajectory leaves the wedge band at some ``k`` in ``K``."""
        c = self._cols(K)
        return self.leaves[np.any(~self.in_band_wedge[:, c], axis=1)] if c.size else self.leaves[:0]

    def Q(self, K) -> np.ndarray:
        """Leaves whose trajectory stays in the tail band for every ``k`` in ``K``."""
        c = self._cols(K)
        return self.leaves[np.all(self.in_band_tail[:, c], axis=1)] if c.size else self.leaves.copy()

    def W(self, K) -> np.ndarray:
        K = set(int(k) for k in K)
        return self.leaves[np.isin(self.root_depth, list(K))]

    def U(self, K) -> np.ndarray:
        """Leaves in ``W^k`` whose depth-``k`` ancestor is above the band's lower edge, some ``k`` in ``K``."""
        hit = np.zeros(self.leaves.size, dtype=bool)
        for j in self._cols(K):
            hit |= (self.root_depth == self.ks[j]) & self.up[:, j]
        return self.leaves[hit]

    def B(self, K) -> np.ndarray:
        """Leaves in ``W^k`` whose cluster holds more than ``e^{wedge(k)^{1/2 - eta}}`` leaves."""
        hit = np.zeros(self.leaves.size, dtype=bool)
        for k in K:
            k = int(k)
            lim = math.exp(float(wedge(self.n, k)) ** (0.5 - self.params.eta))
            hit |= (self.root_depth == k) & (self.cluster_size > lim)
        return self.leaves[hit]

    def D(self, K) -> np.ndarray:
        """Leaves with an unusually low ancestor at some ``k`` in ``K``."""
        c = self._cols(K)
        return self.leaves[np.any(self.low[:, c], axis=1)] if c.size else self.leaves[:0]

    def O(self) -> np.ndarray:
        """Leaves that clear ``sqrt(log 2)(n - k) + n^{eta'}`` for every ``k`` in the window."""
        if self.degenerate_window:
            return self.leaves.copy()
        c = self._cols(range(self.window[0], self.window[1] + 1))
        return self.leaves[np.all(self.above_o[:, c], axis=1)]

    def E(self, r: int) -> np.ndarray:
        """``W^{[n-r, n]} cap Q^{[ceil(n/2), n-r]}``."""
        w = self.W(range(self.n - r, self.n + 1))
        q = self.Q(range(math.ceil(self.n / 2), self.n - r + 1))
        return np.intersect1d(w, q)


def ancestor_values(field: LocalTimeField, leaves: np.ndarray, ks) -> np.ndarray:
    """``L([x]_k)`` for each leaf index and depth, shape ``(leaves, len(ks))``."""
    shape = field.shape
    out = np.empty((leaves.size, len(ks)))
    nb = path_bits(shape.kind, shape.n)
    for j, k in enumerate(ks):
        level = field.level(int(k))
        out[:, j] = level[leaves >> (nb - path_bits(shape.kind, int(k)))]
    return out


def classify_trajectories(field: LocalTimeField, params: ClassifyParams = ClassifyParams()) -> TrajectoryClass:
    """Band, repulsion and cluster-size flags for every leaf of ``F(u)``.

    Depths ``r_n..n`` are evaluated; the repulsion window is ``[r_n, n - r_n]``.
    """
    if not field.complete:
        raise StateError("classification needs local times at every depth")
    shape = field.shape
    n = shape.n
    r_n = r_n_of(n, params.eta)
    leaves = np.flatnonzero(field.leaves() <= params.u)
    ks = np.arange(r_n, n + 1)
    sq = np.sqrt(ancestor_values(field, leaves, ks))
    base = linear_profile(n, ks)
    wd = wedge(n, ks)
    lo_w, hi_w = band(wd, params.eta)
    lo_t, hi_t = band(n - ks, params.eta)
    in_w = (sq >= base + lo_w) & (sq <= base + hi_w)
    in_t = (sq >= base + lo_t) & (sq <= base + hi_t)
    up = sq > base + lo_w
    low = sq <= base - wd.astype(float) ** (0.5 - params.eta_prime)
    above_o = sq >= base + n**params.eta_prime
    dec = decompose(leaves, shape, r_n, params.u)
    root_depth = np.empty(leaves.size, dtype=np.int64)
    size = np.empty(leaves.size, dtype=np.int64)
    pos = {int(x): i for i, x in enumerate(leaves)}
    for c in dec.clusters:
        for x in c.members:
            root_depth[pos[int(x)]] = c.root_depth
            size[pos[int(x)]] = len(c)
    window = (r_n, n - r_n)
    return TrajectoryClass(n, r_n, params, leaves, ks, sq, in_w, in_t, up, low, above_o, root_depth, size,
                           window, degenerate_window=r_n >= n - r_n)


def low_trajectory_event(field: LocalTimeField, eta_prime: float = DEFAULT_ETA_PRIME) -> bool:
    """Is there a leaf and ``k in [1, n - 2 r'_n]`` with ``sqrt L([x]_k) <= sqrt(log 2)(n-k) - r'_n``?"""
    n = field.shape.n
    rp = r_prime(n, eta_prime)
    for k in range(1, n - 2 * rp + 1):
        if np.any(np.sqrt(field.level(k)) <= SQRT_LOG2 * (n - k) - rp):
            return True
    return False


def h_set(n: int, hhat_field: np.ndarray, shape: TreeShape, u: float, K, eta: float = DEFAULT_ETA) -> np.ndarray:
    """``H^K_n(u)``: leaves of ``G_n(u)`` whose ``hhat([x]_k) - sqrt(log 2)(n-k)`` leaves the wedge band.

    ``hhat_field`` is ``h' + m_n`` as a flat array over the whole tree.
    """
    leaves_h = hhat_field[shape.leaves()]
    g = np.flatnonzero(leaves_h**2 <= u)
    hit = np.zeros(g.size, dtype=bool)
    nb = path_bits(shape.kind, n)
    for k in K:
        k = int(k)
        vals = hhat_field[shape.level(k)][g >> (nb - path_bits(shape.kind, k))] - SQRT_LOG2 * (n - k)
        lo, hi = band(wedge(n, k), eta)
        hit |= (vals < lo) | (vals > hi)
    return g[hit]


# --- cluster statistics ----------------------------------------------------

def zero_set(field: LocalTimeField, u: float = 0.0) -> np.ndarray:
    return np.flatnonzero(field.leaves() <= u)


def cluster_count_statistic(snapshot_a: LocalTimeField, eta: float = DEFAULT_ETA) -> float:
    """``|[F(0)]_{r_n}| / sqrt(n)``."""
    n = snapshot_a.shape.n
    return count_ancestors(zero_set(snapshot_a), snapshot_a.shape, r_n_of(n, eta)) / math.sqrt(n)


def phase_b_unvisited_clusters(snapshot_a: LocalTimeField, b_unvisited: np.ndarray, eta: float = DEFAULT_ETA) -> int:
    """``|[F^B(0) cap W^{[n - r_n, n]}_A(0)]_{r_n}|``."""
    shape = snapshot_a.shape
    n = shape.n
    r_n = r_n_of(n, eta)
    w = decompose(zero_set(snapshot_a), shape, r_n).W(range(n - r_n, n + 1))
    survivors = w[np.asarray(b_unvisited)[w]]
    return count_ancestors(survivors, shape, r_n)


def planted_leaves(shape: TreeShape, M: int) -> list[VertexRef]:
    """``M`` leaves spread evenly across the leaf row."""
    w = shape.leaf_count
    if not 1 <= M <= w:
        raise ValueError("M must lie in [1, leaf count]")
    return [VertexRef(shape.kind, shape.n, (i * w) // M) for i in range(M)]


def phase_b_length(n: int, s: float) -> float:
    """``t_B + s n``."""
    return centering(n).t_b + s * n
