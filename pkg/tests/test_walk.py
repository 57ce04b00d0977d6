import math

import numpy as np
import pytest
from scipy import stats as sps

from treecover import branching
from treecover.errors import StateError
from treecover.rng import stream
from treecover.tree import TreeKind, TreeShape, VertexRef
from treecover.walk import (Composite, Covered, RealTime, RootLocalTime, SumLeafLocalTime, WalkConfig, cover_times,
                            hit_before_root, leaf_sums, run_phases, simulate, stop_nu, stop_tau, theta)

KINDS = [TreeKind.REGULAR, TreeKind.UNARY_ROOT]


@pytest.mark.parametrize("kind", KINDS)
def test_root_clock_stop_is_exact(kind):
    out = simulate(WalkConfig(TreeShape(kind, 5), seed=1), RootLocalTime(7.5))
    assert out.field.root_local == 7.5
    assert out.field.values[0] == 7.5
    assert out.status != "jump_cap"


@pytest.mark.parametrize("kind", KINDS)
def test_clock_identity(kind):
    for rid in range(5):
        out = simulate(WalkConfig(TreeShape(kind, 6), seed=2, replica_id=rid), RootLocalTime(4.0))
        assert out.field.clock_gap() < 1e-9


def test_real_time_stop():
    out = simulate(WalkConfig(TreeShape(TreeKind.REGULAR, 4), seed=3), RealTime(20.0))
    assert out.field.real_elapsed == pytest.approx(20.0, abs=1e-9)
    assert out.field.clock_gap() < 1e-9


def test_composite_fires_first_rule():
    shape = TreeShape(TreeKind.REGULAR, 5)
    out = simulate(WalkConfig(shape, seed=4), Composite((RootLocalTime(1e6), RealTime(5.0))))
    assert out.field.real_elapsed == pytest.approx(5.0)
    out = simulate(WalkConfig(shape, seed=4), Composite((RootLocalTime(0.5), RealTime(1e6))))
    assert out.field.root_local == 0.5


def test_stop_rule_errors():
    shape = TreeShape(TreeKind.REGULAR, 4)
    cfg = WalkConfig(shape)
    with pytest.raises(ValueError):
        simulate(cfg, RootLocalTime(-1.0))
    with pytest.raises(ValueError):
        simulate(cfg, RealTime(-1.0))
    with pytest.raises(ValueError):
        simulate(cfg, RootLocalTime(math.inf))
    with pytest.raises(ValueError):
        simulate(cfg, SumLeafLocalTime(5, 1.0))
    with pytest.raises(ValueError):
        simulate(cfg, Composite((SumLeafLocalTime(1, 1.0), SumLeafLocalTime(2, 1.0))))
    with pytest.raises(TypeError):
        simulate(cfg, "forever")


@pytest.mark.parametrize("kind", KINDS)
def test_cover_visits_every_vertex(kind):
    shape = TreeShape(kind, 5)
    out = cover_times(WalkConfig(shape, seed=5))
    assert out.status == "covered"
    assert out.visited_count == shape.vertex_count
    # the run stops on arrival at the last new vertex, before it holds
    assert np.count_nonzero(out.field.values == 0) == 1
    assert out.cover_real == pytest.approx(out.field.real_elapsed)
    assert out.cover_root_clock == pytest.approx(out.field.root_local)


def test_jump_cap():
    cfg = WalkConfig(TreeShape(TreeKind.REGULAR, 6), max_jumps=10)
    out = simulate(cfg, RootLocalTime(100.0))
    assert out.aborted and out.jump_count == 10
    with pytest.raises(RuntimeError):
        simulate(cfg, RootLocalTime(100.0), raise_on_cap=True)


def test_determinism():
    cfg = WalkConfig(TreeShape(TreeKind.REGULAR, 6), seed=9, replica_id=3)
    a = simulate(cfg, RootLocalTime(3.0)).field.values
    b = simulate(cfg, RootLocalTime(3.0)).field.values
    assert np.array_equal(a, b)
    c = simulate(WalkConfig(cfg.shape, seed=9, replica_id=4), RootLocalTime(3.0)).field.values
    assert not np.array_equal(a, c)


def test_untracked_depths():
    shape = TreeShape(TreeKind.REGULAR, 5)
    f = simulate(WalkConfig(shape, track_internal=False, seed=1), RootLocalTime(2.0)).field
    assert f.leaves().size == 32
    with pytest.raises(StateError):
        f.level(2)
    with pytest.raises(StateError):
        f.at(VertexRef(TreeKind.REGULAR, 3, 0))
    with pytest.raises(StateError):
        f.clock_gap()


def test_leaf_sums():
    shape = TreeShape(TreeKind.REGULAR, 3)
    f = simulate(WalkConfig(shape, seed=2), RootLocalTime(5.0)).field
    s, sh, r, rh = leaf_sums(f, 2)
    assert s == pytest.approx(f.level(2).sum())
    assert sh == pytest.approx(s / 4)
    assert r == pytest.approx(sum(f.level(j).sum() for j in range(3)))
    assert rh == pytest.approx(r / 4)
    with pytest.raises(ValueError):
        leaf_sums(f, 4)


@pytest.mark.parametrize("kind", KINDS)
def test_events_match_branching_in_law(kind):
    shape = TreeShape(kind, 4)
    t, m = 3.0, 3000
    ev = np.array([simulate(WalkConfig(shape, seed=11, replica_id=i), RootLocalTime(t)).field.values
                   for i in range(m)])
    rng = stream(11, "branching-route")
    br = np.array([branching.sample_field(shape, t, rng) for _ in range(m)])
    leaves = shape.leaves()
    for col in (leaves.start, leaves.stop - 1):
        assert sps.ks_2samp(ev[:, col], br[:, col]).pvalue > 1e-3
    assert sps.ks_2samp(ev[:, leaves].sum(1), br[:, leaves].sum(1)).pvalue > 1e-3


def test_stop_tau_crosses_and_matches_branching():
    shape = TreeShape(TreeKind.REGULAR, 5)
    k, s, m = 2, 40.0, 2000
    ev, br = [], []
    for i in range(m):
        out = stop_tau(WalkConfig(shape, seed=12, replica_id=i), k, s)
        sk = leaf_sums(out.field, k)[0]
        assert 2 * sk > s
        ev.append((out.field.root_local, sk))
        bo = stop_tau(WalkConfig(shape, seed=13, replica_id=i), k, s, method="branching")
        assert 2 * leaf_sums(bo.field, k)[0] > s
        br.append((bo.field.root_local, leaf_sums(bo.field, k)[0]))
    ev, br = np.array(ev), np.array(br)
    for c in range(2):
        assert sps.ks_2samp(ev[:, c], br[:, c]).pvalue > 1e-3


def test_stop_tau_argument_errors():
    cfg = WalkConfig(TreeShape(TreeKind.REGULAR, 3))
    with pytest.raises(ValueError):
        stop_tau(cfg, 0, 1.0)
    with pytest.raises(ValueError):
        stop_tau(cfg, 1, -1.0)
    with pytest.raises(ValueError):
        stop_tau(cfg, 1, 1.0, method="magic")


def test_stop_nu_degenerate():
    assert theta(4.0, 0.5) == pytest.approx(2.0)
    out = stop_nu(WalkConfig(TreeShape(TreeKind.REGULAR, 3)), 2, 1.0, 1.0)
    assert out.status == "degenerate"
    assert not out.field.values.any()


def test_phases_both_methods():
    shape = TreeShape(TreeKind.REGULAR, 6)
    for method in ("events", "branching"):
        a, b = run_phases(WalkConfig(shape, seed=3), 1.0, method=method)
        assert np.all(b.values >= a.values - 1e-12)
        assert b.root_local > a.root_local


def test_hit_before_root_frequency():
    shape = TreeShape(TreeKind.REGULAR, 4)
    target = VertexRef(TreeKind.REGULAR, 3, 0)
    rng = stream(0, "hit")
    hits = sum(hit_before_root(WalkConfig(shape), target, rng) for _ in range(20000))
    p = 1 / 3
    assert abs(hits / 20000 - p) < 4 * math.sqrt(p * (1 - p) / 20000)
