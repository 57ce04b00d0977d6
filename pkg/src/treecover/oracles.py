"""Exact and analytic reference values.

These routines never simulate the walk. They are the independent side of
every simulation check: a sparse harmonic solve for hitting probabilities,
closed-form moment sums for local times, the atom of the squared Bessel branch
law, a Girsanov-weighted Brownian estimator and the first-moment bound on the
number of rarely visited leaves.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericError
from .tree import TreeKind, TreeShape, VertexRef, width

LOG2 = math.log(2.0)
SQRT_LOG2 = math.sqrt(LOG2)


# --- hitting probabilities -------------------------------------------------

def _neighbours(shape: TreeShape) -> list[np.ndarray]:
    par = shape.parents()
    nbrs: list[list[int]] = [[] for _ in range(shape.vertex_count)]
    for v, p in enumerate(par):
        if p >= 0:
            nbrs[v].append(int(p))
            nbrs[int(p)].append(v)
    return [np.asarray(a, dtype=np.int64) for a in nbrs]


def hitting_probability(shape: TreeShape, start: VertexRef, target, avoid, tol: float = 1e-10) -> float:
    """Probability that the walk from ``start`` hits ``target`` before ``avoid``.

    ``target`` and ``avoid`` may be single vertices or collections. The value
    solves the discrete Dirichlet problem ``h = 1`` on targets, ``h = 0`` on
    avoided vertices and ``h`` equal to the neighbour average elsewhere. Only
    the component of ``start`` is solved, so parts of the tree cut off by the
    boundary do not make the system singular.
    """
    targets = {target.flat} if isinstance(target, VertexRef) else {v.flat for v in target}
    avoids = {avoid.flat} if isinstance(avoid, VertexRef) else {v.flat for v in avoid}
    if targets & avoids:
        raise ValueError("target and avoid sets overlap")
    s = start.flat
    if s in targets:
        return 1.0
    if s in avoids:
        return 0.0

    nbrs = _neighbours(shape)
    boundary = targets | avoids
    # component of `start` in the tree with the boundary removed
    comp, stack, seen = [], [s], {s}
    while stack:
        v = stack.pop()
        comp.append(v)
        for w in nbrs[v]:
            w = int(w)
            if w not in seen and w not in boundary:
                seen.add(w)
                stack.append(w)
    pos = {v: i for i, v in enumerate(comp)}
    m = len(comp)
    rows, cols, vals = [], [], []
    rhs = np.zeros(m)
    touches_boundary = False
    for v in comp:
        i = pos[v]
        deg = len(nbrs[v])
        rows.append(i)
        cols.append(i)
        vals.append(float(deg))
        for w in nbrs[v]:
            w = int(w)
            if w in pos:
                rows.append(i)
                cols.append(pos[w])
                vals.append(-1.0)
            else:
                touches_boundary = True
                if w in targets:
                    rhs[i] += 1.0
    if not touches_boundary:
        raise NumericError("start component never reaches the boundary; system is singular")
    a = sp.csc_matrix((vals, (rows, cols)), shape=(m, m))
    h = spla.spsolve(a, rhs)
    resid = np.max(np.abs(a @ h - rhs)) if m else 0.0
    if not np.isfinite(resid) or resid > tol:
        raise NumericError(f"harmonic solve residual {resid:.3e} above {tol:.1e}")
    return float(h[pos[s]])


def gamblers_ruin(d: int, n: int) -> float:
    """Probability of reaching a fixed depth-``n`` vertex before the root from depth ``d`` on its path."""
    return d / n


# --- local-time moments ----------------------------------------------------

def _leaf_pairs_by_meet(n: int, kind: TreeKind) -> np.ndarray:
    """Ordered leaf pairs of the depth-``n`` tree counted by meet depth."""
    out = np.zeros(n + 1)
    for k in range(n + 1):
        if kind is TreeKind.UNARY_ROOT and k == 0:
            continue
        per_vertex = 1.0 if k == n else 2.0 ** (2 * (n - k) - 1)
        out[k] = width(kind, k) * per_vertex
    return out


def _vertex_pairs_by_meet(n: int, kind: TreeKind) -> np.ndarray:
    """Ordered pairs of vertices (all depths) counted by meet depth."""
    out = np.zeros(n + 1)
    for k in range(n + 1):
        if kind is TreeKind.UNARY_ROOT and k == 0:
            continue
        size = 2.0 ** (n - k + 1) - 1.0
        child = (size - 1.0) / 2.0
        out[k] = width(kind, k) * (size * size - 2.0 * child * child)
    return out


def centring_constant(n: int) -> float:
    """``c_n`` with ``Var(S_hat) = 2 t c_n`` on the regular tree; tends to 1."""
    return sum(2.0 ** (-k + (1 if k == n else 0)) * k for k in range(n + 1)) / 2.0


def exact_moments(n: int, t: float, kind: TreeKind = TreeKind.REGULAR) -> dict:
    """Exact finite-``n`` moments of the leaf and total local-time sums at root time ``t``.

    Returns a dict with ``ES``, ``VarS``, ``ER``, ``VarR`` (exact pair count),
    ``VarR_stated`` (the grouping with pair factor ``2(2^{n-k}-1)^2 + 1{k=n}``,
    which omits ancestor-descendant pairs), ``VarR_asymptotic`` (``2^{2n+3} t``),
    ``cov`` and ``centred_cov`` indexed by meet depth, and the constant ``c_n``.
    """
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    ks = np.arange(n + 1)
    leaves = width(kind, n)
    vertices = sum(width(kind, d) for d in range(n + 1))
    var_s = float(np.sum(_leaf_pairs_by_meet(n, kind) * 2.0 * t * ks))
    var_r = float(np.sum(_vertex_pairs_by_meet(n, kind) * 2.0 * t * ks))
    stated = float(sum(width(kind, k) * (2.0 * (2.0 ** (n - k) - 1.0) ** 2 + (k == n)) * 2.0 * t * k
                       for k in range(n + 1)))
    var_s_hat = var_s / leaves**2
    # Cov(L(x), S) for one leaf x: leaves y grouped by meet depth with x
    per_leaf = [(1.0 if k == n else 2.0 ** (n - k - 1)) for k in range(n + 1)]
    if kind is TreeKind.UNARY_ROOT:
        per_leaf[0] = 0.0
    cov_x_s = sum(c * 2.0 * t * k for k, c in enumerate(per_leaf))
    return {
        "ES": leaves * t,
        "VarS": var_s,
        "ER": vertices * t,
        "VarR": var_r,
        "VarR_stated": stated,
        "VarR_asymptotic": 2.0 ** (2 * n + 3) * t,
        "cov": {int(k): 2.0 * int(k) * t for k in ks},
        "centred_cov": {int(k): 2.0 * int(k) * t - var_s_hat for k in ks},
        "cov_centred_vs_mean": cov_x_s / leaves - var_s_hat,
        "c_n": var_s_hat / (2.0 * t) if t > 0 else centring_constant(n),
    }


def leaf_local_time_variance(n: int, t: float) -> float:
    """``Var L_t(x) = 2 n t`` for a depth-``n`` vertex."""
    return 2.0 * n * t


def tau_overshoot_mean(k: int) -> float:
    """``E[S_{k, tau} - 2^k s]`` at ``tau = tau_{k, 2^{k+1} s}``; exactly ``2^k - 1``."""
    return 2.0**k - 1.0


def stationary_mass(shape: TreeShape) -> np.ndarray:
    """Long-run fraction of real time at each vertex: ``deg(x) / sum deg``."""
    deg = np.full(shape.vertex_count, 3.0)
    deg[0] = 1.0 if shape.unary else 2.0
    deg[shape.leaves()] = 1.0
    return deg / deg.sum()


def nonvisit_count_law(shape: TreeShape, leaves: list[VertexRef], t: float) -> np.ndarray:
    """Exact law of the number of ``leaves`` never visited by root time ``t``.

    Root excursions form a Poisson process, so a set ``A`` stays unvisited with
    probability ``exp(-t * sum_c P_c(hit A before root))``, the sum running over
    the root's children with one excursion per unit root time into each.
    Inclusion-exclusion then turns these into the count law.
    """
    root = shape.root()
    children = [root.child(0)] if shape.unary else [root.child(0), root.child(1)]
    m = len(leaves)
    q = {}
    for size in range(m + 1):
        for sub in itertools.combinations(range(m), size):
            if not sub:
                q[sub] = 1.0
                continue
            targets = [leaves[i] for i in sub]
            rate = sum(hitting_probability(shape, c, targets, root) for c in children)
            q[sub] = math.exp(-t * rate)
    law = np.zeros(m + 1)
    for sub in q:
        # P(exactly `sub` unvisited) = sum over supersets with alternating signs
        rest = [i for i in range(m) if i not in sub]
        total = 0.0
        for size in range(len(rest) + 1):
            for extra in itertools.combinations(rest, size):
                total += (-1) ** size * q[tuple(sorted(sub + extra))]
        law[len(sub)] += total
    return law


# --- squared Bessel branch -------------------------------------------------

def bessel_atom(t: float, k: float) -> float:
    """Probability that the branch local time at depth ``k`` vanishes: ``exp(-t/k)``."""
    if t < 0 or k <= 0:
        raise ValueError("need t >= 0 and k > 0")
    return math.exp(-t / k)


def bessel_density_bound(t: float, s: float, y: float) -> float:
    """Shape ``s^-1 sqrt(t/y) exp(-(sqrt t - sqrt y)^2 / s)`` of the density bound (constant 1)."""
    if y <= 0:
        raise ValueError("the density bound is defined for y > 0")
    if s <= 0:
        raise ValueError("s must be positive")
    return math.sqrt(t / y) / s * math.exp(-((math.sqrt(t) - math.sqrt(y)) ** 2) / s)


def bessel_girsanov_estimate(
    t: float,
    n: int,
    functional: Callable[[np.ndarray], np.ndarray],
    dt: float = 0.005,
    paths: int = 100_000,
    rng: np.random.Generator | None = None,
    chunk: int = 50_000,
) -> tuple[float, float]:
    """Estimate ``E[phi(Y_0..Y_n); Y_n != 0]`` through a weighted Brownian motion.

    ``B`` starts at ``sqrt(t)`` with variance 1/2 per unit time and is run by
    plain Euler steps of size ``dt``; paths that touch 0 on the grid are
    killed. Each surviving path is weighted by
    ``sqrt(sqrt(t) / B_n) * exp(-(3/16) int_0^n B^-2 ds)`` with the integral
    taken by the trapezoidal rule. ``functional`` receives an array of shape
    ``(paths, n + 1)`` with ``B^2`` at integer times and returns one value per
    path. Returns the estimate and its standard error.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps_per_unit = round(1.0 / dt)
    if abs(steps_per_unit * dt - 1.0) > 1e-9:
        raise ValueError("1/dt must be an integer so that integer times are grid points")
    rng = rng if rng is not None else np.random.default_rng()
    sd = math.sqrt(dt / 2.0)
    sums = 0.0
    sq = 0.0
    done = 0
    while done < paths:
        m = min(chunk, paths - done)
        b = np.full(m, math.sqrt(t))
        alive = b > 0
        integral = np.zeros(m)
        marks = np.empty((m, n + 1))
        marks[:, 0] = b * b
        inv_prev = np.where(alive, 1.0 / np.where(alive, b * b, 1.0), 0.0)
        for unit in range(1, n + 1):
            for _ in range(steps_per_unit):
                b = b + sd * rng.standard_normal(m)
                alive &= b > 0
                inv = np.where(alive, 1.0 / np.where(alive, b * b, 1.0), 0.0)
                integral += 0.5 * dt * (inv_prev + inv)
                inv_prev = inv
            marks[:, unit] = b * b
        weight = np.zeros(m)
        ok = alive
        weight[ok] = np.sqrt(math.sqrt(t) / b[ok]) * np.exp(-3.0 / 16.0 * integral[ok])
        vals = np.zeros(m)
        if ok.any():
            vals[ok] = weight[ok] * np.asarray(functional(marks[ok]), dtype=float)
        sums += vals.sum()
        sq += np.square(vals).sum()
        done += m
    mean = sums / paths
    se = math.sqrt(max(sq / paths - mean * mean, 0.0) / paths)
    return mean, se


# --- first-moment bound ----------------------------------------------------

def first_moment_bound(n: int, t: float, u: float) -> float:
    """Upper bound ``exp(-t/n + 2tu/n^2 + n log 2 + 1)`` on ``E|F_{n,t}(u)|``."""
    if n < 1 or t < 0 or u < 0:
        raise ValueError("need n >= 1 and t, u >= 0")
    return math.exp(-t / n + 2.0 * t * u / n**2 + n * LOG2 + 1.0)


def first_moment_bound_shifted(s: float, u: float) -> float:
    """Specialised bound ``C_u exp(-sqrt(log 2) s)`` with ``C_u = exp(2 log2 u + 1)``.

    Valid for ``sqrt(t) = sqrt(log 2) n + s`` and ``n >= 4u``.
    """
    return math.exp(2.0 * LOG2 * u + 1.0) * math.exp(-SQRT_LOG2 * s)


# --- negatively correlated field -------------------------------------------

def omega_covariance_closed_form(n: int) -> np.ndarray:
    """Target covariance of the edge field on two copies up to generation ``n``.

    Edges are ordered copy 1 then copy 2, each by generation and index. The
    entries are 1/2 on the diagonal, ``-2^{-(m+1)}`` between generation-``m``
    edges of different copies and 0 otherwise.
    """
    gens = np.concatenate([np.full(1 << m, m) for m in range(1, n + 1)])
    copy = np.concatenate([np.zeros(gens.size, int), np.ones(gens.size, int)])
    g = np.concatenate([gens, gens])
    cross = (copy[:, None] != copy[None, :]) & (g[:, None] == g[None, :])
    cov = np.where(cross, -(2.0 ** -(g[:, None] + 1.0)), 0.0)
    np.fill_diagonal(cov, 0.5)
    return cov


def sigma_path_covariance_closed_form(m: int) -> np.ndarray:
    """Covariance of sigma path sums at depth ``m``, by meet depth: ``2^{m-1}``, 0 or -1."""
    idx = np.arange(1 << m)
    diff = idx[:, None] ^ idx[None, :]
    k = m - np.frexp(diff.astype(float))[1]
    return np.where(k == m, 2.0 ** (m - 1), np.where(k == 0, -1.0, 0.0))


def negcorr_cross_covariance(d1: int, d2: int) -> float:
    """Cross-copy covariance ``-(1 - 2^{-min(d1, d2)}) / 2``."""
    return -0.5 * (1.0 - 2.0 ** (-min(d1, d2)))


# --- isomorphism -----------------------------------------------------------

def iso_leaf_moments(n: int, t: float) -> tuple[float, float]:
    """Mean and variance of ``(h'(x) + sqrt t)^2`` at depth ``n``: ``t + n/2`` and ``2nt + n^2/2``."""
    return t + n / 2.0, 2.0 * n * t + n * n / 2.0


def lognormal_moments() -> tuple[float, float]:
    """Median and mean of ``Lambda ~ LogNormal(-2 log 2, 2 log 2)``: 1/4 and 1/2."""
    return math.exp(-2.0 * LOG2), math.exp(-2.0 * LOG2 + LOG2)

