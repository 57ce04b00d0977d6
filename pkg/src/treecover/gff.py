"""Discrete Gaussian free field on binary trees and its derivative martingales.

The field has ``h(root) = 0`` and i.i.d. N(0, 1/2) increments along edges.
Edge weights are drawn level by level from the stream, so the depth-``K``
field is a prefix of the depth-``K+1`` field drawn with the same generator.

Also provided: the negatively correlated pair of fields on two copies of the
regular tree, built from auxiliary sibling-antisymmetric fields, and the
log-normal variable that relates its martingale limit to the plain one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StateError
from .tree import TreeKind, TreeShape, VertexRef, meet, width

LOG2 = math.log(2.0)
SQRT_LOG2 = math.sqrt(LOG2)
EDGE_SD = math.sqrt(0.5)
BETA = 2.0 * SQRT_LOG2


@dataclass(frozen=True)
class GaussianField:
    shape: TreeShape
    values: np.ndarray

    def level(self, depth: int) -> np.ndarray:
        if depth > self.shape.n:
            raise StateError(f"field sampled to depth {self.shape.n}, asked for {depth}")
        return self.values[self.shape.level(depth)]

    def leaves(self) -> np.ndarray:
        return self.level(self.shape.n)

    def at(self, v: VertexRef) -> float:
        return float(self.values[v.flat])


def _next_level(prev: np.ndarray, kind: TreeKind, depth: int, rng: np.random.Generator) -> np.ndarray:
    """Values at ``depth`` from those at ``depth - 1``."""
    w = width(kind, depth)
    parent = np.repeat(prev, w // prev.size)
    return parent + EDGE_SD * rng.standard_normal(w)


def sample_dgff(shape: TreeShape, rng: np.random.Generator) -> GaussianField:
    values = np.empty(shape.vertex_count)
    values[0] = 0.0
    for d in range(1, shape.n + 1):
        values[shape.level(d)] = _next_level(values[shape.level(d - 1)], shape.kind, d, rng)
    return GaussianField(shape, values)


def iter_levels(kind: TreeKind, n: int, rng: np.random.Generator):
    """Yield ``(depth, values)`` for depths ``1..n`` keeping one level in memory.

    Consumes the stream exactly like :func:`sample_dgff`.
    """
    cur = np.zeros(1)
    for d in range(1, n + 1):
        cur = _next_level(cur, kind, d, rng)
        yield d, cur


# --- derivative martingales ------------------------------------------------

def _weight(kind: TreeKind, n: int) -> float:
    """Log of the normalisation: ``2^{-2n}`` on the regular tree, ``2^{-2n+1}`` with a unary root."""
    return -2.0 * n * LOG2 + (LOG2 if kind is TreeKind.UNARY_ROOT else 0.0)


def martingale_value(leaves: np.ndarray, n: int, kind: TreeKind = TreeKind.REGULAR,
                     variant: str = "derivative", centre: float | None = None) -> float:
    """Derivative or critical exponential martingale of depth-``n`` leaf values.

    ``variant="derivative"`` gives ``c_n sum (sqrt(log 2) n - h) e^{2 sqrt(log 2) h}``
    and ``variant="exponential"`` drops the linear factor. The largest exponent
    is factored out before exponentiating. ``centre`` overrides the
    ``sqrt(log 2) n`` term.
    """
    h = np.asarray(leaves, dtype=float)
    if h.size == 0:
        raise ValueError("no leaves")
    expo = BETA * h
    top = float(expo.max())
    e = np.exp(expo - top)
    if variant == "derivative":
        a = SQRT_LOG2 * n if centre is None else centre
        s = float(np.dot(a - h, e))
    elif variant == "exponential":
        s = float(e.sum())
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return s * math.exp(top + _weight(kind, n))


def derivative_martingale(gf: GaussianField, n: int | None = None, variant: str = "derivative") -> float:
    """``Z_n`` (regular tree) or ``Zbar_n`` (unary root) of a sampled field."""
    n = gf.shape.n if n is None else n
    if n > gf.shape.n:
        raise StateError(f"field sampled to depth {gf.shape.n}, asked for {n}")
    if n < 0:
        raise ValueError("negative depth")
    return martingale_value(gf.level(n), n, gf.shape.kind, variant)


@dataclass(frozen=True)
class MartingaleSeries:
    kind: TreeKind
    variant: str
    depths: tuple
    values: tuple

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.depths, self.values))


def martingale_series(kind: TreeKind, depths, rng: np.random.Generator,
                      variant: str = "derivative") -> MartingaleSeries:
    """Martingale values at each of ``depths`` along a single field realization."""
    depths = sorted(set(int(d) for d in depths))
    if not depths or depths[0] < 1:
        raise ValueError("depths must be positive")
    wanted = set(depths)
    out = []
    for d, level in iter_levels(kind, depths[-1], rng):
        if d in wanted:
            out.append(martingale_value(level, d, kind, variant))
    return MartingaleSeries(kind, variant, tuple(depths), tuple(out))


def sample_martingale(kind: TreeKind, n: int, rng: np.random.Generator, variant: str = "derivative") -> float:
    """Truncated limit sample ``Z_n`` or ``Zbar_n``."""
    level = None
    for _, level in iter_levels(kind, n, rng):
        pass
    return martingale_value(level, n, kind, variant)


# --- negatively correlated pair --------------------------------------------

def sigma_sd(k: int) -> float:
    """Standard deviation of an auxiliary edge weight in generation ``k``."""
    return math.sqrt(2.0 ** max(k - 2, 0))


def sample_sigma_paths(m: int, rng: np.random.Generator) -> np.ndarray:
    """Root-to-depth-``m`` path sums of one auxiliary field.

    In generation ``k`` each parent draws one N(0, 2^{(k-2) v 0}) value ``g`` and
    its two child edges carry ``+g`` and ``-g``.
    """
    cur = np.zeros(1)
    for k in range(1, m + 1):
        g = sigma_sd(k) * rng.standard_normal(cur.size)
        cur = np.repeat(cur, 2) + np.column_stack([g, -g]).ravel()
    return cur


def sample_omega(n: int, rng: np.random.Generator) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Edge weights of both copies, generations ``1..n``.

    Generation-``g`` edges of the two copies are the depth-``g+1`` vertices of a
    regular tree split by their first step. Each gets ``2^{-(g+1)/2}`` times the
    path sum of a fresh auxiliary field of depth ``g+1``.
    """
    w1, w2 = [], []
    for g in range(1, n + 1):
        m = g + 1
        paths = 2.0 ** (-m / 2.0) * sample_sigma_paths(m, rng)
        half = 1 << g
        w1.append(paths[:half])
        w2.append(paths[half:])
    return w1, w2


@dataclass(frozen=True)
class NegCorrField:
    """The two-copy field; ``h1``/``h2`` are flat arrays on regular trees of depth ``n``."""

    n: int
    h1: np.ndarray
    h2: np.ndarray
    omega: tuple = field(repr=False, default=())

    @property
    def shape(self) -> TreeShape:
        return TreeShape(TreeKind.REGULAR, self.n)

    def copy(self, i: int) -> GaussianField:
        if i not in (1, 2):
            raise ValueError("copy must be 1 or 2")
        return GaussianField(self.shape, self.h1 if i == 1 else self.h2)

    def at(self, copy: int, v: VertexRef) -> float:
        return self.copy(copy).at(v)


def _path_sums(weights: list[np.ndarray], n: int) -> np.ndarray:
    shape = TreeShape(TreeKind.REGULAR, n)
    values = np.zeros(shape.vertex_count)
    for g in range(1, n + 1):
        values[shape.level(g)] = np.repeat(values[shape.level(g - 1)], 2) + weights[g - 1]
    return values


def sample_negcorr(n: int, rng: np.random.Generator) -> NegCorrField:
    if n < 1:
        raise ValueError("n must be >= 1")
    w1, w2 = sample_omega(n, rng)
    return NegCorrField(n, _path_sums(w1, n), _path_sums(w2, n), (tuple(w1), tuple(w2)))


def _sigma_matrix(m: int) -> np.ndarray:
    """Linear map from the independent generators of one auxiliary field to its depth-``m`` path sums."""
    leaves = np.arange(1 << m)
    cols = []
    for k in range(1, m + 1):
        parent = leaves >> (m - k + 1)
        sign = np.where((leaves >> (m - k)) & 1, -1.0, 1.0)
        block = np.zeros((leaves.size, 1 << (k - 1)))
        block[leaves, parent] = sign * sigma_sd(k)
        cols.append(block)
    return np.hstack(cols)


def sigma_path_covariance(m: int) -> np.ndarray:
    a = _sigma_matrix(m)
    return a @ a.T


def omega_covariance_from_construction(n: int) -> np.ndarray:
    """Covariance of all edge weights implied by the construction, without sampling.

    Ordering matches :func:`treecover.oracles.omega_covariance_closed_form`:
    copy 1 then copy 2, each by generation and index. Auxiliary fields of
    different generations are independent, so only same-generation blocks are
    nonzero.
    """
    sizes = [1 << g for g in range(1, n + 1)]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    total = int(starts[-1])
    cov = np.zeros((2 * total, 2 * total))
    for g in range(1, n + 1):
        m = g + 1
        c = sigma_path_covariance(m) * 2.0 ** (-m)
        half = 1 << g
        i1 = slice(starts[g - 1], starts[g])
        i2 = slice(total + starts[g - 1], total + starts[g])
        cov[i1, i1] = c[:half, :half]
        cov[i2, i2] = c[half:, half:]
        cov[i1, i2] = c[:half, half:]
        cov[i2, i1] = c[half:, :half]
    return cov


def negcorr_covariance_oracle(x: tuple[int, VertexRef], y: tuple[int, VertexRef]) -> float:
    """Closed-form covariance of the two-copy field at ``(copy, vertex)`` pairs."""
    (cx, vx), (cy, vy) = x, y
    if cx not in (1, 2) or cy not in (1, 2):
        raise ValueError("copy must be 1 or 2")
    if cx == cy:
        return meet(vx, vy).depth / 2.0
    return -0.5 * (1.0 - 2.0 ** (-min(vx.depth, vy.depth)))


def sample_bold_z(n: int, rng: np.random.Generator) -> float:
    """Truncated ``Z^1_n + Z^2_n`` of the two-copy field."""
    f = sample_negcorr(n, rng)
    lv = f.shape.level(n)
    return martingale_value(f.h1[lv], n) + martingale_value(f.h2[lv], n)


def shifted_pair_sum(n: int, rng: np.random.Generator) -> float:
    """Two-copy sum with the shared Gaussian shift; equal in law to ``4 Z_{n+1}``.

    Each copy's depth-``n`` leaves are shifted by
    ``sqrt(1 - 2^-n) xi + sqrt(2^-n) xi^i`` with independent N(0, 1/2)
    variables, and both sums use ``sqrt(log 2)(n + 1)`` as the linear term.
    """
    f = sample_negcorr(n, rng)
    xi, x1, x2 = EDGE_SD * rng.standard_normal(3)
    a, b = math.sqrt(1.0 - 2.0**-n), math.sqrt(2.0**-n)
    lv = f.shape.level(n)
    c = SQRT_LOG2 * (n + 1)
    return (martingale_value(f.h1[lv] + a * xi + b * x1, n, centre=c)
            + martingale_value(f.h2[lv] + a * xi + b * x2, n, centre=c))


def sample_lambda(rng: np.random.Generator, size: int | None = None):
    """``Lambda ~ LogNormal(-2 log 2, 2 log 2)``."""
    return np.exp(-2.0 * LOG2 + math.sqrt(2.0 * LOG2) * rng.standard_normal(size))


def gumbel_mixture_cdf(s: float, rate: float, C: float, z_samples) -> float:
    """Monte Carlo value of ``E exp(-C Z e^{-rate s})`` over ``z_samples``."""
    z = np.asarray(z_samples, dtype=float)
    if z.size == 0:
        raise ValueError("z_samples is empty")
    if C <= 0 or rate <= 0:
        raise ValueError("C and rate must be positive")
    with np.errstate(over="ignore"):
        return float(np.mean(np.exp(-C * z * math.exp(-rate * s))))
