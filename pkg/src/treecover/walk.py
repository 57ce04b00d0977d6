"""Continuous-time random walk on a finite binary tree.

The walk holds at ``x`` for an Exp(deg x) time and then jumps to a uniformly
chosen neighbour. Local time is accumulated in a flat per-vertex array (heap
layout, see :mod:`treecover.tree`). Two clocks are kept: real elapsed time and
the local time at the root. A stop on the root clock ends at the generalised
inverse of the root local time, i.e. with the walk sitting at the root.

The event loop in :func:`_walk_kernel` is the reference engine. Depth-limited
experiments can instead use the exact field samplers in
:mod:`treecover.branching`; ``method="branching"`` selects them where offered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import branching
from .errors import StateError
from .rng import stream
from .stats import centering
from .tree import TreeShape, VertexRef, ancestor

# kernel status codes
RUNNING, ROOT_TIME, REAL_TIME, COVERED, TAU, JUMP_CAP = range(6)
STATUS_NAMES = {
    ROOT_TIME: "root_time",
    REAL_TIME: "real_time",
    COVERED: "covered",
    TAU: "tau",
    JUMP_CAP: "jump_cap",
}

# integer state slots
_D, _I, _JUMPS, _VISITED, _EXC, _STATUS = range(6)
# float state slots
_REAL, _REAL_C, _SK, _COVER_REAL, _COVER_ROOT, _CROSSED = range(6)


@nb.njit(cache=True)
def _flat(unary, d, i):
    if unary:
        return i if d == 0 else (1 << (d - 1)) + i
    return (1 << d) - 1 + i


@nb.njit(cache=True)
def _walk_kernel(rng, unary, n, values, visited, exc_last, exc_count,
                 istate, fstate, t_root, t_real, stop_cover, tau_k, tau_target, max_jumps):
    """Advance the walk until a stop rule fires; state lives in ``istate``/``fstate``.

    ``values[0]`` is the root local time. Real time uses compensated summation.
    """
    d = istate[_D]
    i = istate[_I]
    jumps = istate[_JUMPS]
    nvis = istate[_VISITED]
    exc = istate[_EXC]
    real = fstate[_REAL]
    comp = fstate[_REAL_C]
    s_k = fstate[_SK]
    crossed = fstate[_CROSSED] > 0.0
    total = values.size
    track_exc = exc_last.size > 0
    root_deg = 1 if unary else 2
    status = RUNNING
    while status == RUNNING:
        if d == 0:
            deg = root_deg
        elif d == n:
            deg = 1
        else:
            deg = 3
        pos = _flat(unary, d, i)
        hold = -math.log1p(-rng.random()) / deg
        stop = RUNNING
        if d == 0:
            if values[0] + hold >= t_root:
                hold = t_root - values[0]
                stop = ROOT_TIME
        if real + hold >= t_real:
            hold = t_real - real
            stop = REAL_TIME
        if d == tau_k:
            if not crossed:
                if 2.0 * (s_k + hold) > tau_target:
                    crossed = True
            s_k += hold
        if stop == ROOT_TIME:
            values[0] = t_root
        else:
            values[pos] += hold
        # compensated real clock
        y = hold - comp
        tmp = real + y
        comp = (tmp - real) - y
        real = tmp
        if stop == REAL_TIME:
            real = t_real
            comp = 0.0
        if stop != RUNNING:
            status = stop
            continue
        # jump to a uniform neighbour
        j = int(rng.random() * deg)
        if d == 0:
            exc += 1
            d = 1
            i = 0 if unary else j
        elif j == 0:
            d -= 1
            i >>= 1
        else:
            d += 1
            i = 2 * i + (j - 1)
        jumps += 1
        pos = _flat(unary, d, i)
        if visited[pos] == 0:
            visited[pos] = 1
            nvis += 1
            if nvis == total:
                fstate[_COVER_REAL] = real
                fstate[_COVER_ROOT] = values[0]
                if stop_cover:
                    status = COVERED
        if track_exc and d > 0:
            if exc_last[pos] != exc:
                exc_last[pos] = exc
                exc_count[pos] += 1
        if d == 0 and crossed:
            status = TAU
        if status == RUNNING and jumps >= max_jumps:
            status = JUMP_CAP
    istate[_D] = d
    istate[_I] = i
    istate[_JUMPS] = jumps
    istate[_VISITED] = nvis
    istate[_EXC] = exc
    istate[_STATUS] = status
    fstate[_REAL] = real
    fstate[_REAL_C] = comp
    fstate[_SK] = s_k
    fstate[_CROSSED] = 1.0 if crossed else 0.0
    return status


@nb.njit(cache=True)
def _hit_kernel(rng, unary, n, start_d, start_i, target_d, target_i, count):
    """Number of excursions from ``start`` that reach ``target`` before depth 0."""
    hits = 0
    for _ in range(count):
        d = start_d
        i = start_i
        running = True
        while running:
            if d == target_d and i == target_i:
                hits += 1
                running = False
            elif d == 0:
                running = False
            else:
                deg = 1 if d == n else 3
                j = int(rng.random() * deg)
                if j == 0:
                    d -= 1
                    i >>= 1
                else:
                    d += 1
                    i = 2 * i + (j - 1)
    return hits


# --- public types ----------------------------------------------------------

@dataclass(frozen=True)
class RootLocalTime:
    t: float


@dataclass(frozen=True)
class RealTime:
    T: float


@dataclass(frozen=True)
class Covered:
    pass


@dataclass(frozen=True)
class SumLeafLocalTime:
    """Stop at the first root time with ``2 S_{k,t} > s``."""

    k: int
    s: float


@dataclass(frozen=True)
class Composite:
    """Stop as soon as any of the member rules fires."""

    rules: tuple


@dataclass(frozen=True)
class WalkConfig:
    shape: TreeShape
    track_internal: bool = True
    seed: int = 0
    replica_id: int = 0
    stream_name: str = "walk"
    max_jumps: int | None = None
    count_excursion_visits: bool = False

    def rng(self) -> np.random.Generator:
        return stream(self.seed, self.stream_name, self.replica_id)


@dataclass
class LocalTimeField:
    """Per-vertex occupation times with clock metadata.

    ``values`` is a flat heap-layout array. Depths outside ``tracked`` hold NaN
    and raise :class:`StateError` when read through :meth:`level`.
    """

    shape: TreeShape
    values: np.ndarray
    real_elapsed: float
    root_local: float
    tracked: tuple = ()

    def __post_init__(self):
        if not self.tracked:
            self.tracked = tuple(range(self.shape.n + 1))

    def level(self, depth: int) -> np.ndarray:
        if depth not in self.tracked:
            raise StateError(f"depth {depth} is not tracked")
        return self.values[self.shape.level(depth)]

    def leaves(self) -> np.ndarray:
        return self.level(self.shape.n)

    def at(self, v: VertexRef) -> float:
        if v.depth not in self.tracked:
            raise StateError(f"depth {v.depth} is not tracked")
        return float(self.values[v.flat])

    @property
    def complete(self) -> bool:
        return len(self.tracked) == self.shape.n + 1

    def clock_gap(self) -> float:
        """Relative gap between the summed field and the real clock."""
        if not self.complete:
            raise StateError("clock identity needs every depth")
        total = math.fsum(self.values)
        return abs(total - self.real_elapsed) / max(self.real_elapsed, 1e-300)


@dataclass
class WalkOutcome:
    field: LocalTimeField
    cover_real: float | None
    cover_root_clock: float | None
    jump_count: int
    visited_count: int
    status: str
    excursions: int = 0
    excursion_visits: np.ndarray | None = None

    @property
    def aborted(self) -> bool:
        return self.status == "jump_cap"


@dataclass
class PhaseRun:
    """Snapshots after phase A and after phase B, plus phase-B leaf non-visit marks."""

    a: LocalTimeField
    b: LocalTimeField
    b_unvisited: np.ndarray = field(repr=False)

    def __iter__(self):
        yield self.a
        yield self.b


# --- engine ----------------------------------------------------------------

class _Walker:
    """Mutable engine state; one instance per replica."""

    def __init__(self, config: WalkConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.shape = config.shape
        self.rng = rng if rng is not None else config.rng()
        v = self.shape.vertex_count
        self.values = np.zeros(v)
        self.visited = np.zeros(v, dtype=np.uint8)
        self.visited[0] = 1
        if config.count_excursion_visits:
            self.exc_last = np.full(v, -1, dtype=np.int64)
            self.exc_count = np.zeros(v, dtype=np.int64)
        else:
            self.exc_last = np.zeros(0, dtype=np.int64)
            self.exc_count = np.zeros(0, dtype=np.int64)
        self.istate = np.zeros(6, dtype=np.int64)
        self.istate[_VISITED] = 1
        self.fstate = np.zeros(6)
        self.fstate[_COVER_REAL] = np.nan
        self.fstate[_COVER_ROOT] = np.nan

    def advance(self, t_root=math.inf, t_real=math.inf, cover=False, tau_k=-1, tau_target=math.inf):
        cap = self.config.max_jumps if self.config.max_jumps is not None else np.iinfo(np.int64).max
        if self.shape.vertex_count == int(self.istate[_VISITED]) and cover:
            return COVERED
        self.fstate[_SK] = 0.0
        self.fstate[_CROSSED] = 0.0
        return _walk_kernel(
            self.rng, self.shape.unary, self.shape.n, self.values, self.visited,
            self.exc_last, self.exc_count, self.istate, self.fstate,
            float(t_root), float(t_real), bool(cover), int(tau_k), float(tau_target), int(cap),
        )

    def field(self) -> LocalTimeField:
        values = self.values.copy()
        tracked = tuple(range(self.shape.n + 1))
        if not self.config.track_internal:
            tracked = (0, self.shape.n)
            for d in range(1, self.shape.n):
                values[self.shape.level(d)] = np.nan
        return LocalTimeField(self.shape, values, float(self.fstate[_REAL]), float(self.values[0]), tracked)

    def outcome(self, status: int) -> WalkOutcome:
        cr = float(self.fstate[_COVER_REAL])
        cc = float(self.fstate[_COVER_ROOT])
        return WalkOutcome(
            field=self.field(),
            cover_real=None if math.isnan(cr) else cr,
            cover_root_clock=None if math.isnan(cc) else cc,
            jump_count=int(self.istate[_JUMPS]),
            visited_count=int(self.istate[_VISITED]),
            status=STATUS_NAMES.get(status, "running"),
            excursions=int(self.istate[_EXC]),
            excursion_visits=self.exc_count.copy() if self.config.count_excursion_visits else None,
        )


def _flatten(stop) -> list:
    if isinstance(stop, Composite):
        out = []
        for r in stop.rules:
            out.extend(_flatten(r))
        return out
    return [stop]


def _stop_params(stop, shape: TreeShape) -> dict:
    params = {"t_root": math.inf, "t_real": math.inf, "cover": False, "tau_k": -1, "tau_target": math.inf}
    taus = 0
    for r in _flatten(stop):
        if isinstance(r, RootLocalTime):
            if r.t < 0:
                raise ValueError("root local time must be nonnegative")
            params["t_root"] = min(params["t_root"], r.t)
        elif isinstance(r, RealTime):
            if r.T < 0:
                raise ValueError("real time must be nonnegative")
            params["t_real"] = min(params["t_real"], r.T)
        elif isinstance(r, Covered):
            params["cover"] = True
        elif isinstance(r, SumLeafLocalTime):
            if not 1 <= r.k <= shape.n or r.s < 0:
                raise ValueError("SumLeafLocalTime needs 1 <= k <= n and s >= 0")
            taus += 1
            params["tau_k"] = r.k
            params["tau_target"] = r.s
        else:
            raise TypeError(f"unknown stop rule {r!r}")
    if taus > 1:
        raise ValueError("at most one SumLeafLocalTime rule per run")
    if all(math.isinf(params[k]) for k in ("t_root", "t_real")) and not params["cover"] and taus == 0:
        raise ValueError("stop rule can never fire")
    return params


def simulate(config: WalkConfig, stop, rng: np.random.Generator | None = None,
             raise_on_cap: bool = False) -> WalkOutcome:
    """Run one replica of the walk from the root until ``stop`` fires.

    With ``config.max_jumps`` set, a run that hits the cap returns a partial
    outcome with ``status == "jump_cap"`` (or raises when ``raise_on_cap``).
    """
    walker = _Walker(config, rng)
    status = walker.advance(**_stop_params(stop, config.shape))
    if status == JUMP_CAP and raise_on_cap:
        raise RuntimeError("jump cap reached before the stop rule fired")
    return walker.outcome(status)


def cover_times(config: WalkConfig, rng: np.random.Generator | None = None) -> WalkOutcome:
    """Run until every vertex has been visited; both cover clocks are reported."""
    return simulate(config, Covered(), rng)


def phase_times(n: int, s: float) -> tuple[float, float]:
    """Root-clock lengths of phase A and phase B."""
    c = centering(n)
    return c.t_a, c.t_b + s * n


def run_phases(config: WalkConfig, s: float, method: str = "events",
               rng: np.random.Generator | None = None) -> PhaseRun:
    """Run phase A to root time ``t_A``, then phase B for ``t_B + s n`` more.

    Phase-B non-visit marks flag leaves whose local time did not grow during
    phase B. ``method="branching"`` samples the two snapshots exactly from the
    top-down field law, using that the field increments over disjoint root-time
    intervals are independent.
    """
    shape = config.shape
    if shape.n < 2:
        raise ValueError("phases need n >= 2")
    t_a, t_b = phase_times(shape.n, s)
    if t_b < 0:
        raise ValueError("phase B length t_B + s n is negative")
    rng = rng if rng is not None else config.rng()
    if method == "branching":
        va = branching.sample_field(shape, t_a, rng)
        inc = branching.sample_field(shape, t_b, rng)
        a = LocalTimeField(shape, va, float(va.sum()), t_a)
        vb = va + inc
        vb[0] = t_a + t_b
        b = LocalTimeField(shape, vb, float(vb.sum()), t_a + t_b)
        return PhaseRun(a, b, inc[shape.leaves()] == 0.0)
    if method != "events":
        raise ValueError(f"unknown method {method!r}")
    walker = _Walker(config, rng)
    walker.advance(t_root=t_a)
    a = walker.field()
    before = walker.values[shape.leaves()].copy()
    walker.advance(t_root=t_a + t_b)
    b = walker.field()
    return PhaseRun(a, b, walker.values[shape.leaves()] == before)


def leaf_sums(field: LocalTimeField, k: int) -> tuple[float, float, float, float]:
    """``(S_k, S_hat_k, R_k, R_hat_k)`` with hats normalised by the depth-``k`` width."""
    shape = field.shape
    if not 0 <= k <= shape.n:
        raise ValueError(f"k={k} outside [0, {shape.n}]")
    s = float(np.sum(field.level(k)))
    r = float(sum(np.sum(field.level(j)) for j in range(k + 1)))
    w = shape.width(k)
    return s, s / w, r, r / w


def stop_tau(config: WalkConfig, k: int, s: float, method: str = "events",
             rng: np.random.Generator | None = None) -> WalkOutcome:
    """Run to ``tau_{k,s} = inf{t : 2 S_{k,t} > s}`` on the root clock.

    The run ends when the walk returns to the root after the crossing, so the
    field includes the whole crossing excursion. ``method="branching"`` uses
    the excursion-by-excursion sampler and fills depths below ``k`` top-down.
    """
    shape = config.shape
    if not 1 <= k <= shape.n:
        raise ValueError("need 1 <= k <= n")
    if s < 0:
        raise ValueError("need s >= 0")
    if method == "events":
        return simulate(config, SumLeafLocalTime(k, s), rng)
    if method != "branching":
        raise ValueError(f"unknown method {method!r}")
    rng = rng if rng is not None else config.rng()
    values, tau, excursions = branching.sample_tau_field(shape, k, s, rng)
    branching.fill_below(shape, values, k, rng)
    f = LocalTimeField(shape, values, math.fsum(values), tau)
    return WalkOutcome(f, None, None, 0, 0, "tau", excursions=excursions)


def theta(s: float, xi: float) -> float:
    """``theta_s = s - 2 sqrt(s) xi``."""
    return s - 2.0 * math.sqrt(s) * xi


def stop_nu(config: WalkConfig, k: int, s: float, xi: float, method: str = "events",
            rng: np.random.Generator | None = None) -> WalkOutcome:
    """Run to ``nu_{k,s} = tau_{k, 2^{k+1} theta_s}``.

    A nonpositive ``theta_s`` gives a flagged outcome with status
    ``"degenerate"`` and an empty field.
    """
    th = theta(s, xi)
    if th <= 0:
        empty = LocalTimeField(config.shape, np.zeros(config.shape.vertex_count), 0.0, 0.0)
        return WalkOutcome(empty, None, None, 0, 0, "degenerate")
    return stop_tau(config, k, 2.0 ** (k + 1) * th, method, rng)


def hit_before_root(config: WalkConfig, target: VertexRef, rng: np.random.Generator | None = None) -> bool:
    """One excursion from the depth-1 ancestor of ``target``: does it reach ``target`` first?"""
    return hit_count(config.shape, target, 1, rng if rng is not None else config.rng()) == 1


def hit_count(shape: TreeShape, target: VertexRef, excursions: int, rng: np.random.Generator) -> int:
    """Number of ``excursions`` from ``[target]_1`` that reach ``target`` before the root.

    Only the jump chain matters for this event, so holding times are not drawn.
    """
    if target.kind is not shape.kind or target.depth > shape.n:
        raise ValueError("target is not a vertex of the shape")
    if target.depth == 0:
        raise ValueError("target must differ from the root")
    start = ancestor(target, 1)
    return int(_hit_kernel(rng, shape.unary, shape.n, 1, start.index, target.depth, target.index, int(excursions)))
