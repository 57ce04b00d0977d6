import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treecover import stats
from treecover.rng import stream


def test_centering_values():
    c = stats.centering(100)
    assert c.m_n == pytest.approx(79.107, abs=1e-3)
    assert c.sqrt_t_c == pytest.approx(80.490, abs=1e-3)
    assert math.sqrt(c.t_a) == pytest.approx(c.m_n)
    assert c.t_c == pytest.approx(c.sqrt_t_c**2)
    assert c.real_scale == 2.0**101 * 100


@pytest.mark.parametrize("n", [1, 0, -3])
def test_centering_rejects_small_n(n):
    with pytest.raises(ValueError):
        stats.centering(n)


@given(st.integers(2, 10**6))
def test_centering_finite_and_positive(n):
    c = stats.centering(n)
    vals = [c.m_n, c.t_a, c.t_b, c.sqrt_t_c, c.real_center]
    assert all(math.isfinite(v) for v in vals)
    assert c.m_n > 0


@pytest.mark.parametrize("s", [-2.0, 0.0, 2.0])
def test_phase_clock_consistency(s):
    n = 10**4
    c = stats.centering(n)
    gap = math.sqrt(c.t_a + c.t_b + s * n) - c.sqrt_t_c - s / (2 * stats.SQRT_LOG2)
    assert abs(gap) < 0.05


def test_ks_examples():
    a = stream(0, "ks").random(500)
    d, p = stats.ks_two_sample(a, a)
    assert d == 0 and p == 1
    rng = stream(1, "ks")
    _, p = stats.ks_two_sample(rng.random(10**4), rng.random(10**4) + 0.5)
    assert p < 1e-6
    with pytest.raises(ValueError):
        stats.ks_two_sample([], [1.0])


def test_ks_pvalue_calibration():
    rng = stream(2, "ks-cal")
    ps = [stats.ks_two_sample(rng.random(300), rng.random(300))[1] for _ in range(200)]
    assert 0.3 <= np.median(ps) <= 0.7


def test_poisson_gof():
    counts = stream(3, "pois").poisson(3.0, 10**4)
    assert stats.poisson_gof(counts, 3.0).p > 0.01
    assert stats.poisson_gof(np.zeros(1000, dtype=int), 5.0).p < 1e-6
    with pytest.raises(ValueError):
        stats.poisson_gof(counts, 0.0)


def test_gof_skipped_when_uninformative():
    res = stats.chisquare_gof(np.zeros(3, dtype=int), np.array([0.5, 0.5]))
    assert res.skipped and math.isnan(res.p)


def test_binomial_gof():
    counts = stream(4, "binom").binomial(4, 0.3, 5000)
    assert stats.binomial_gof(counts, 4, 0.3).p > 0.01
    assert stats.binomial_gof(counts, 4, 0.6).p < 1e-6


def test_dispersion():
    rng = stream(5, "disp")
    assert stats.dispersion(rng.poisson(4.0, 20000)) == pytest.approx(1.0, abs=0.05)
    mixed = rng.poisson(rng.gamma(2.0, 2.0, 20000))
    assert stats.dispersion(mixed) > 1.5
    assert math.isnan(stats.dispersion(np.zeros(10)))


def test_bootstrap_ci_covers_mean():
    x = stream(6, "boot").standard_normal(2000) + 3.0
    lo, hi = stats.bootstrap_ci(x, np.mean, stream(6, "boot-r"), resamples=500)
    assert lo < 3.0 < hi and hi - lo < 0.2


def test_holm():
    assert stats.holm([0.5, 0.001, 0.02], 0.01) == [True, False, True]
    assert stats.holm([0.004, 0.006], 0.01) == [False, False]
    assert stats.holm([0.004, 0.011], 0.01) == [False, True]
    assert stats.holm([], 0.01) == []


def test_small_helpers():
    assert stats.z_score(1.0, 0.0, 1.0) == 0.0
    assert stats.z_score(2.0, 0.0, 1.0) == math.inf
    assert stats.z_score(2.0, 0.5, 1.0) == 2.0
    m, se = stats.mean_and_se([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))
    c, _ = stats.covariance_with_se([1, 2, 3, 4], [2, 4, 6, 8])
    assert c == pytest.approx(np.cov([1, 2, 3, 4], [2, 4, 6, 8])[0, 1])


def test_log_survival_slope_of_exponential():
    x = stream(7, "exp").exponential(1.0, 20000)
    assert stats.log_survival_slope(x) == pytest.approx(-1.0, abs=0.05)
