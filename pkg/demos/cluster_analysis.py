"""Clusters of unvisited leaves after phase A and their trajectory classes.

Run to the phase-A root time, group the unvisited leaves by their depth-r_n
ancestor and look at how their local-time profiles sit relative to the
linear profile.
"""

import numpy as np

from treecover import clusters
from treecover.tree import TreeKind, TreeShape
from treecover.walk import WalkConfig, run_phases

n = 12
shape = TreeShape(TreeKind.REGULAR, n)
a, b = run_phases(WalkConfig(shape, seed=11), s=0.0, method="branching")
zeros = clusters.zero_set(a)
r_n = clusters.r_n_of(n)
dec = clusters.decompose(zeros, shape, r_n)
print(f"n={n}: {zeros.size} unvisited leaves in {len(dec)} clusters (r_n={r_n})")
print("cluster root depths:", sorted(c.root_depth for c in dec.clusters))

tc = clusters.classify_trajectories(a)
window = range(tc.window[0], tc.window[1] + 1)
print(f"leaves leaving the wedge band in the window: {tc.R(window).size}")
print(f"leaves above the repulsion line throughout: {tc.O().size}")
print("cluster-count statistic:", round(clusters.cluster_count_statistic(a), 3))
print("unvisited after phase B:", int(np.count_nonzero(b.leaves() == 0)))
