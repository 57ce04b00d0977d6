import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treecover import gff, oracles
from treecover.errors import StateError
from treecover.rng import stream
from treecover.tree import TreeKind, TreeShape, VertexRef, meet

KINDS = [TreeKind.REGULAR, TreeKind.UNARY_ROOT]


@pytest.mark.parametrize("kind", KINDS)
def test_variance_is_half_depth(kind):
    shape = TreeShape(kind, 6)
    rng = stream(0, "gffvar")
    x = np.array([gff.sample_dgff(shape, rng).values for _ in range(8000)])
    assert np.all(x[:, 0] == 0)
    for d in (1, 3, 6):
        v = x[:, shape.level(d).start].var(ddof=1)
        assert abs(v / (d / 2) - 1) < 0.08


def test_covariance_by_meet():
    kind = TreeKind.REGULAR
    shape = TreeShape(kind, 4)
    rng = stream(1, "gffcov")
    x = np.array([gff.sample_dgff(shape, rng).leaves() for _ in range(20000)])
    for j in (1, 2, 8):
        target = meet(VertexRef(kind, 4, 0), VertexRef(kind, 4, j)).depth / 2
        assert abs(np.mean(x[:, 0] * x[:, j]) - target) < 0.05


@given(st.sampled_from(KINDS), st.integers(1, 10), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_prefix_consistency(kind, n, seed):
    big = gff.sample_dgff(TreeShape(kind, n + 1), stream(seed, "p"))
    small = gff.sample_dgff(TreeShape(kind, n), stream(seed, "p"))
    assert np.array_equal(big.values[: small.values.size], small.values)
    levels = dict(gff.iter_levels(kind, n, stream(seed, "p")))
    assert np.array_equal(levels[n], small.leaves())


@given(st.integers(1, 12), st.floats(-40, 40))
@settings(max_examples=40, deadline=None)
def test_martingale_max_shift_matches_naive(n, shift):
    h = stream(n, "mshift").standard_normal(1 << n) * math.sqrt(n / 2) + shift
    naive = 4.0**-n * np.sum((gff.SQRT_LOG2 * n - h) * np.exp(gff.BETA * h))
    got = gff.martingale_value(h, n)
    assert got == pytest.approx(naive, rel=1e-9, abs=1e-300)
    expo = 4.0**-n * np.sum(np.exp(gff.BETA * h))
    assert gff.martingale_value(h, n, variant="exponential") == pytest.approx(expo, rel=1e-9, abs=1e-300)


def test_martingale_errors_and_series():
    shape = TreeShape(TreeKind.REGULAR, 5)
    f = gff.sample_dgff(shape, stream(0, "ms"))
    with pytest.raises(StateError):
        gff.derivative_martingale(f, 6)
    with pytest.raises(ValueError):
        gff.martingale_value(np.array([]), 3)
    with pytest.raises(ValueError):
        gff.martingale_value(f.leaves(), 5, variant="other")
    series = gff.martingale_series(TreeKind.REGULAR, [5, 2, 3], stream(0, "ms"))
    assert series.depths == (2, 3, 5)
    assert series.values[-1] == pytest.approx(gff.derivative_martingale(f))
    assert series.values[0] == pytest.approx(gff.derivative_martingale(f, 2))
    assert gff.sample_martingale(TreeKind.REGULAR, 5, stream(0, "ms")) == pytest.approx(series.values[-1])


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_omega_construction_matches_closed_form(n):
    np.testing.assert_allclose(gff.omega_covariance_from_construction(n), oracles.omega_covariance_closed_form(n),
                               atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 4, 6])
def test_sigma_path_covariance(m):
    np.testing.assert_allclose(gff.sigma_path_covariance(m), oracles.sigma_path_covariance_closed_form(m), atol=1e-12)


def test_omega_sampler_matches_construction():
    n, m = 3, 40000
    rng = stream(3, "omega")
    rows = []
    for _ in range(m):
        w1, w2 = gff.sample_omega(n, rng)
        rows.append(np.concatenate(w1 + w2))
    emp = np.cov(np.array(rows), rowvar=False)
    assert np.max(np.abs(emp - gff.omega_covariance_from_construction(n))) < 0.03


def test_negcorr_field_covariance():
    kind, n, m = TreeKind.REGULAR, 4, 20000
    rng = stream(4, "negcorr")
    fs = [gff.sample_negcorr(n, rng) for _ in range(m)]
    pairs = [((1, VertexRef(kind, 4, 0)), (2, VertexRef(kind, 4, 0))),
             ((1, VertexRef(kind, 2, 1)), (2, VertexRef(kind, 4, 9))),
             ((1, VertexRef(kind, 4, 0)), (1, VertexRef(kind, 4, 3))),
             ((2, VertexRef(kind, 3, 2)), (2, VertexRef(kind, 3, 2)))]
    for x, y in pairs:
        a = np.array([f.at(*x) for f in fs])
        b = np.array([f.at(*y) for f in fs])
        assert abs(np.mean(a * b) - gff.negcorr_covariance_oracle(x, y)) < 0.05
    with pytest.raises(ValueError):
        fs[0].copy(3)
    with pytest.raises(ValueError):
        gff.sample_negcorr(0, rng)


def test_lambda_law():
    lam = gff.sample_lambda(stream(5, "lam"), 100000)
    med, mean = oracles.lognormal_moments()
    assert np.median(lam) == pytest.approx(med, rel=0.03)
    assert lam.mean() == pytest.approx(mean, rel=0.05)
    assert np.log(lam).var() == pytest.approx(2 * math.log(2), rel=0.03)


def test_gumbel_mixture_cdf():
    z = np.abs(stream(6, "gz").standard_normal(1000)) + 0.1
    vals = [gff.gumbel_mixture_cdf(s, 1.0, 1.0, z) for s in np.linspace(-5, 10, 16)]
    assert all(0 <= v <= 1 for v in vals)
    assert np.all(np.diff(vals) >= 0)
    assert vals[-1] > 0.99
    with pytest.raises(ValueError):
        gff.gumbel_mixture_cdf(0.0, 1.0, 1.0, [])
    with pytest.raises(ValueError):
        gff.gumbel_mixture_cdf(0.0, 0.0, 1.0, z)
