"""Centering sequences and the statistical tests used by the experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

LOG2 = math.log(2.0)
SQRT_LOG2 = math.sqrt(LOG2)


@dataclass(frozen=True)
class CenteringSchedule:
    n: int
    m_n: float
    t_a: float
    t_b: float
    sqrt_t_c: float
    real_center: float

    @property
    def t_c(self) -> float:
        return self.sqrt_t_c**2

    @property
    def real_scale(self) -> float:
        """``2^{n+1} n``; overflows for ``n >= 1023``, so it is computed on demand."""
        return 2.0 ** (self.n + 1) * self.n


def extremal_centering(n: float) -> float:
    """``m_n = sqrt(log 2) n - 3 log n / (4 sqrt(log 2))``."""
    return SQRT_LOG2 * n - 3.0 / (4.0 * SQRT_LOG2) * math.log(n)


def centering(n: int) -> CenteringSchedule:
    """All centering quantities at depth ``n``.

    ``t_a = m_n^2`` and ``t_b = n log n / 2`` are the two phase lengths on the
    root clock; ``sqrt_t_c`` centres the square root of the root-clock cover
    time; the real cover time is centred as ``T / (2^{n+1} n) - real_center``.
    """
    if n < 2:
        raise ValueError("centering needs n >= 2")
    m = extremal_centering(n)
    return CenteringSchedule(
        n=n,
        m_n=m,
        t_a=m * m,
        t_b=0.5 * n * math.log(n),
        sqrt_t_c=SQRT_LOG2 * n - math.log(n) / (2.0 * SQRT_LOG2),
        real_center=LOG2 * n - math.log(n),
    )


# --- tests -----------------------------------------------------------------

def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    res = sps.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


@dataclass(frozen=True)
class GofResult:
    chi2: float
    p: float
    dof: int
    skipped: bool = False


def _pool_bins(expected: np.ndarray, minimum: float = 5.0) -> list[list[int]]:
    """Merge adjacent cells until each holds at least ``minimum`` expected counts."""
    groups: list[list[int]] = []
    cur: list[int] = []
    acc = 0.0
    for i, e in enumerate(expected):
        cur.append(i)
        acc += e
        if acc >= minimum:
            groups.append(cur)
            cur, acc = [], 0.0
    if cur:
        if groups:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    return groups


def chisquare_gof(counts, probs) -> GofResult:
    """Chi-square goodness of fit of integer ``counts`` to the law ``probs`` on 0..K.

    ``probs[-1]`` is treated as the upper tail ``P(X >= K)``. Cells are pooled
    so that every pooled cell expects at least five observations. When pooling
    leaves a single cell the test carries no information and is skipped.
    """
    counts = np.asarray(counts, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    if counts.size == 0:
        raise ValueError("no counts")
    k = probs.size - 1
    observed = np.bincount(np.minimum(counts, k), minlength=k + 1)[: k + 1].astype(float)
    expected = probs * counts.size
    groups = _pool_bins(expected)
    if len(groups) < 2:
        return GofResult(float("nan"), float("nan"), 0, skipped=True)
    o = np.array([observed[g].sum() for g in groups])
    e = np.array([expected[g].sum() for g in groups])
    chi2 = float(np.sum((o - e) ** 2 / e))
    dof = len(groups) - 1
    return GofResult(chi2, float(sps.chi2.sf(chi2, dof)), dof)


def poisson_gof(counts, rate: float) -> GofResult:
    """Chi-square test of ``counts`` against Poisson(``rate``) with tail pooling."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    counts = np.asarray(counts, dtype=np.int64)
    top = int(max(counts.max(initial=0), sps.poisson.ppf(1 - 1e-12, rate))) + 1
    probs = sps.poisson.pmf(np.arange(top), rate)
    probs = np.append(probs, sps.poisson.sf(top - 1, rate))
    return chisquare_gof(counts, probs)


def binomial_gof(counts, m: int, p: float) -> GofResult:
    probs = sps.binom.pmf(np.arange(m + 1), m, p)
    return chisquare_gof(counts, probs)


def dispersion(counts) -> float:
    """Index of dispersion: sample variance over sample mean."""
    counts = np.asarray(counts, dtype=float)
    mean = counts.mean()
    if mean == 0:
        return float("nan")
    return float(counts.var(ddof=1) / mean)


def bootstrap_ci(values, statistic, rng: np.random.Generator, level: float = 0.99, resamples: int = 2000):
    """Percentile bootstrap interval of ``statistic`` over ``values``."""
    values = np.asarray(values)
    stats = np.empty(resamples)
    for b in range(resamples):
        stats[b] = statistic(values[rng.integers(0, values.size, values.size)])
    lo, hi = np.quantile(stats, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def holm(pvalues, alpha: float = 0.01) -> list[bool]:
    """Holm step-down: pass flags (null not rejected) at family level ``alpha``."""
    p = np.asarray(pvalues, dtype=float)
    order = np.argsort(p)
    passed = np.ones(p.size, dtype=bool)
    m = p.size
    for rank, i in enumerate(order):
        if p[i] <= alpha / (m - rank):
            passed[i] = False
        else:
            break
    return passed.tolist()


def z_score(estimate: float, se: float, target: float) -> float:
    if se <= 0:
        return 0.0 if estimate == target else math.inf
    return (estimate - target) / se


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def covariance_with_se(x, y) -> tuple[float, float]:
    """Sample covariance and a delta-method standard error from the products."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = (x - x.mean()) * (y - y.mean())
    n = x.size
    return float(prod.sum() / (n - 1)), float(prod.std(ddof=1) / math.sqrt(n))


def normality_pvalues(x) -> tuple[float, float]:
    """Skewness and kurtosis z-test p-values."""
    x = np.asarray(x, dtype=float)
    return float(sps.skewtest(x).pvalue), float(sps.kurtosistest(x).pvalue)


def log_survival_slope(x, lo_q: float = 0.5, hi_q: float = 0.99) -> float:
    """Least-squares slope of ``log P(X > s)`` over the empirical quantile range."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    surv = 1.0 - np.arange(1, n + 1) / (n + 1)
    lo, hi = int(lo_q * n), int(hi_q * n)
    sel = slice(lo, hi)
    slope, _ = np.polyfit(x[sel], np.log(surv[sel]), 1)
    return float(slope)
