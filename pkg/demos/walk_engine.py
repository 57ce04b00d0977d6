"""The continuous-time walk on the root clock and its independent branching sampler.

The event loop runs the walk until the root has accumulated local time ``t``;
the branching sampler draws the same field top-down as Gamma(Poisson(parent)).
Their agreement in law is the main dual-route check of the engine.
"""

import numpy as np
from scipy import stats as sps

from treecover import branching
from treecover.rng import stream
from treecover.tree import TreeKind, TreeShape
from treecover.walk import RootLocalTime, WalkConfig, cover_times, leaf_sums, simulate, stop_tau

shape = TreeShape(TreeKind.REGULAR, 6)
t = 5.0

out = simulate(WalkConfig(shape, seed=1), RootLocalTime(t))
print(f"root local time {out.field.root_local}, real time {out.field.real_elapsed:.2f}, "
      f"clock gap {out.field.clock_gap():.1e}, jumps {out.jump_count}")

m = 2000
ev = np.array([simulate(WalkConfig(shape, seed=2, replica_id=i), RootLocalTime(t)).field.leaves().sum()
               for i in range(m)])
rng = stream(2, "demo-branching")
br = np.array([branching.sample_field(shape, t, rng)[shape.leaves()].sum() for _ in range(m)])
print(f"leaf sum mean: events {ev.mean():.1f}, branching {br.mean():.1f}, exact {shape.leaf_count * t:.1f}")
print(f"KS p-value events vs branching: {sps.ks_2samp(ev, br).pvalue:.3f}")

cov = cover_times(WalkConfig(shape, seed=3))
print(f"cover: real time {cov.cover_real:.1f}, root clock {cov.cover_root_clock:.2f}")

tau = stop_tau(WalkConfig(shape, seed=4), k=3, s=2.0**4 * 50)
print("S_3 at tau:", leaf_sums(tau.field, 3)[0], "target crossing", 2.0**3 * 50)
