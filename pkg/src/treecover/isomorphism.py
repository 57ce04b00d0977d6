"""Distributional checks of the isomorphism between local times and the DGFF.

On the unary-root tree, ``L_t(x) + h(x)^2`` has the same joint law over the
leaves as ``(h'(x) + sqrt t)^2``, where ``h`` and ``h'`` are DGFFs and ``h`` is
independent of the walk. The joint construction is not attempted; the two
sides are sampled independently and compared in law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gff, walk
from .report import ExperimentReport
from .rng import stream
from .stats import centering, holm, ks_two_sample, z_score
from .tree import TreeKind, TreeShape


@dataclass(frozen=True)
class IsoSample:
    """Leaf values of one draw: local times ``L``, field ``h`` and ``lhs = L + h^2``."""

    L: np.ndarray
    h: np.ndarray

    @property
    def lhs(self) -> np.ndarray:
        return self.L + self.h**2


def _shape(n: int) -> TreeShape:
    return TreeShape(TreeKind.UNARY_ROOT, n)


def iso_lhs_sample(n: int, t: float, seed: int, replica_id: int = 0) -> IsoSample:
    """One left-hand-side draw; the walk and the field use separate streams."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    shape = _shape(n)
    cfg = walk.WalkConfig(shape, seed=seed, replica_id=replica_id, stream_name="iso-walk")
    L = walk.simulate(cfg, walk.RootLocalTime(t)).field.leaves()
    h = gff.sample_dgff(shape, stream(seed, "iso-h", replica_id)).leaves()
    return IsoSample(L, h)


def iso_lhs_batch(n: int, t: float, samples: int, seed: int) -> np.ndarray:
    """``samples`` left-hand-side leaf vectors, shape ``(samples, leaves)``."""
    shape = _shape(n)
    L = np.empty((samples, shape.leaf_count))
    for i in range(samples):
        cfg = walk.WalkConfig(shape, seed=seed, replica_id=i, stream_name="iso-walk")
        L[i] = walk.simulate(cfg, walk.RootLocalTime(t)).field.leaves()
    h = leaf_dgff_batch(n, samples, stream(seed, "iso-h", 0))
    return L + h**2


def leaf_dgff_batch(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Leaf values of ``samples`` independent DGFFs on the unary-root tree."""
    cur = np.zeros((samples, 1))
    for d in range(1, n + 1):
        w = 1 << max(d - 1, 0)
        cur = np.repeat(cur, w // cur.shape[1], axis=1) + gff.EDGE_SD * rng.standard_normal((samples, w))
    return cur


def iso_rhs_sample(n: int, t: float, rng: np.random.Generator, samples: int | None = None) -> np.ndarray:
    """``(h'(x) + sqrt t)^2`` over the leaves, for one or ``samples`` draws."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    h = leaf_dgff_batch(n, 1 if samples is None else samples, rng)
    out = (h + math.sqrt(t)) ** 2
    return out[0] if samples is None else out


def _second_moment_z(a: np.ndarray, b: np.ndarray) -> list[tuple[tuple[int, int], float]]:
    """Two-sample z-scores of ``E X_i X_j`` for every leaf pair ``i <= j``."""
    m = a.shape[1]
    out = []
    for i in range(m):
        for j in range(i, m):
            pa, pb = a[:, i] * a[:, j], b[:, i] * b[:, j]
            se = math.sqrt(pa.var(ddof=1) / pa.size + pb.var(ddof=1) / pb.size)
            out.append(((i, j), z_score(pa.mean() - pb.mean(), se, 0.0)))
    return out


def iso_distribution_test(n: int, t: float, samples: int, seed: int, projections: int = 4,
                          alpha: float = 0.01) -> ExperimentReport:
    """Compare the two sides of the isomorphism in law.

    Tests: per-leaf marginal KS, KS on fixed random projections, and z-scores
    of all pairwise second moments (|z| < 3). KS p-values are Holm-corrected
    at family level ``alpha``.
    """
    if samples < 20:
        raise ValueError("need at least 20 samples")
    lhs = iso_lhs_batch(n, t, samples, seed)
    rhs = iso_rhs_sample(n, t, stream(seed, "iso-hprime", 0), samples)
    report = ExperimentReport("iso-test", {"n": n, "t": t, "samples": samples, "projections": projections},
                              {"seed": seed, "replicas": [0, samples]})
    names, pvals, stats_ = [], [], []
    for i in range(lhs.shape[1]):
        d, p = ks_two_sample(lhs[:, i], rhs[:, i])
        names.append(f"marginal_ks_leaf{i}")
        pvals.append(p)
        stats_.append(d)
    prng = stream(seed, "iso-projections", 0)
    for j in range(projections if lhs.shape[1] > 1 else 0):
        w = prng.standard_normal(lhs.shape[1])
        d, p = ks_two_sample(lhs @ w, rhs @ w)
        names.append(f"projection_ks_{j}")
        pvals.append(p)
        stats_.append(d)
    for name, d, p, ok in zip(names, stats_, pvals, holm(pvals, alpha)):
        report.add_test(name, d, ok, p=p, threshold=alpha, kind="exact", note="Holm family")
    for (i, j), z in _second_moment_z(lhs, rhs):
        report.add_test(f"second_moment_{i}_{j}", z, abs(z) < 3.0, threshold=3.0, kind="exact")
    mean_target = t + n / 2.0
    for i in range(lhs.shape[1]):
        x = lhs[:, i]
        z = z_score(x.mean(), x.std(ddof=1) / math.sqrt(x.size), mean_target)
        report.add_test(f"lhs_mean_leaf{i}", z, abs(z) < 3.0, threshold=3.0, kind="exact")
    for i in range(lhs.shape[1]):
        report.add_stat(f"lhs_leaf{i}", lhs[:, i])
        report.add_stat(f"rhs_leaf{i}", rhs[:, i])
    return report


# --- sub-level sets --------------------------------------------------------

@dataclass(frozen=True)
class SubLevelSet:
    u: float
    members: np.ndarray
    source: str

    def __len__(self) -> int:
        return int(self.members.size)


def sublevel(values, u: float, source: str = "F") -> SubLevelSet:
    """Leaf indices whose statistic is at most ``u``."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    values = np.asarray(values)
    return SubLevelSet(u, np.flatnonzero(values <= u), source)


def hhat(n: int, hprime: np.ndarray) -> np.ndarray:
    """``h' + m_n`` (elementwise, any depth)."""
    return hprime + centering(n).m_n


def g_set(n: int, hprime_leaves: np.ndarray, u: float) -> SubLevelSet:
    """``G_n(u)``: leaves with ``(h' + m_n)^2 <= u``."""
    return sublevel(hhat(n, hprime_leaves) ** 2, u, source="G")


def g_set_sizes(n: int, u: float, samples: int, rng: np.random.Generator) -> np.ndarray:
    """``|G_n(u)|`` for ``samples`` independent fields."""
    h = leaf_dgff_batch(n, samples, rng)
    return np.count_nonzero(hhat(n, h) ** 2 <= u, axis=1)
