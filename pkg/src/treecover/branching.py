"""Exact top-down samplers for the local-time field on the root clock.

Given the local time ``l`` at a vertex, the walk jumps to each child at rate one
per unit of local time, and every such visit leaves an Exp(1) contribution at
the child. Hence the child's local time is Gamma(Poisson(l), 1), independently
across children, and the whole field at root time ``t`` is a Markov branching
chain started from ``t`` at the root. These samplers give an independent route
to the same laws as the event loop in :mod:`treecover.walk`.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .tree import TreeShape, VertexRef, ancestor


def _child_level(parent: np.ndarray, rng: np.random.Generator, branching: int = 2) -> np.ndarray:
    lam = np.repeat(parent, branching) if branching > 1 else parent
    return rng.standard_gamma(rng.poisson(lam)).astype(float)


def sample_field(shape: TreeShape, t: float, rng: np.random.Generator) -> np.ndarray:
    """Flat local-time field at root time ``t`` (heap layout)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    values = np.empty(shape.vertex_count)
    values[0] = t
    fill_below(shape, values, 0, rng)
    return values


def fill_below(shape: TreeShape, values: np.ndarray, k: int, rng: np.random.Generator) -> None:
    """Fill depths ``k+1..n`` of ``values`` in place from the depth-``k`` entries."""
    for d in range(k, shape.n):
        parent = values[shape.level(d)]
        b = 1 if (d == 0 and shape.unary) else 2
        values[shape.level(d + 1)] = _child_level(parent, rng, b)


def sample_branch(t, n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Local times along one root-to-depth-``n`` branch, shape ``(size, n + 1)``.

    Column ``j`` is the local time at the depth-``j`` ancestor. The law is the
    same on both tree kinds.
    """
    m = 1 if size is None else size
    out = np.empty((m, n + 1))
    out[:, 0] = t
    for j in range(n):
        out[:, j + 1] = rng.standard_gamma(rng.poisson(out[:, j]))
    return out[0] if size is None else out


def path_union(leaves: list[VertexRef]) -> list[VertexRef]:
    """All ancestors of ``leaves`` (including themselves) in breadth-first order."""
    if not leaves:
        return []
    seen = set()
    for x in leaves:
        for k in range(x.depth + 1):
            seen.add(ancestor(x, k))
    return sorted(seen)


def sample_paths(shape: TreeShape, leaves: list[VertexRef], t: float, rng: np.random.Generator,
                 size: int) -> tuple[list[VertexRef], np.ndarray]:
    """Local times on the union of root paths to ``leaves`` for ``size`` replicas.

    Returns the vertex list and an array of shape ``(size, len(vertices))``.
    Only the marginal law on these vertices is sampled, which is exact since
    each vertex depends on the rest of the tree only through its parent.
    """
    verts = path_union(leaves)
    if any(v.kind is not shape.kind or v.depth > shape.n for v in verts):
        raise ValueError("leaves are not vertices of the shape")
    col = {v: j for j, v in enumerate(verts)}
    out = np.empty((size, len(verts)))
    for j, v in enumerate(verts):
        if v.depth == 0:
            out[:, j] = t
        else:
            out[:, j] = rng.standard_gamma(rng.poisson(out[:, col[v.parent()]]))
    return verts, out


@nb.njit(cache=True)
def _tau_excursions(rng, unary, k, target, values):
    """Add whole root excursions to ``values`` (depths 0..k) until ``2 S_k > target``.

    Returns ``(tau, excursions)`` where ``tau`` is the root local time at the
    start of the crossing excursion.
    """
    root_deg = 1 if unary else 2
    cap = 1 << k
    cur_idx = np.empty(cap, dtype=np.int64)
    cur_val = np.empty(cap)
    nxt_idx = np.empty(cap, dtype=np.int64)
    nxt_val = np.empty(cap)
    root = 0.0
    s_k = 0.0
    excursions = 0
    running = True
    while running:
        root += rng.standard_exponential() / root_deg
        excursions += 1
        if unary:
            first = 1
        else:
            first = 1 + int(rng.random() * 2)
        ell = rng.standard_exponential()
        values[first] += ell
        cur_idx[0] = first
        cur_val[0] = ell
        size = 1
        for d in range(1, k):
            nsize = 0
            for a in range(size):
                p = cur_idx[a]
                lam = cur_val[a]
                base = 2 * p if unary else 2 * p + 1
                for c in range(2):
                    m = rng.poisson(lam)
                    if m > 0:
                        g = rng.standard_gamma(m)
                        values[base + c] += g
                        nxt_idx[nsize] = base + c
                        nxt_val[nsize] = g
                        nsize += 1
            for a in range(nsize):
                cur_idx[a] = nxt_idx[a]
                cur_val[a] = nxt_val[a]
            size = nsize
        for a in range(size):
            s_k += cur_val[a]
        if 2.0 * s_k > target:
            running = False
    values[0] = root
    return root, excursions


def sample_tau_field(shape: TreeShape, k: int, s: float, rng: np.random.Generator):
    """Field on depths ``0..k`` at ``tau_{k,s}``, built excursion by excursion.

    Returns ``(values, tau, excursions)``; entries deeper than ``k`` are zero.
    """
    if not 1 <= k <= shape.n:
        raise ValueError("need 1 <= k <= n")
    values = np.zeros(shape.vertex_count)
    tau, exc = _tau_excursions(rng, shape.unary, k, float(s), values)
    return values, float(tau), int(exc)

