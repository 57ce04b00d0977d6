"""Exact finite-size quantities that the simulations are checked against."""

import math

from treecover import oracles
from treecover.tree import TreeKind, TreeShape, VertexRef

shape = TreeShape(TreeKind.REGULAR, 8)
h = oracles.hitting_probability(shape, VertexRef(TreeKind.REGULAR, 1, 0), VertexRef(TreeKind.REGULAR, 8, 0),
                                shape.root())
print(f"P(hit a depth-8 leaf before the root from depth 1) = {h:.12f} (1/8 = {1 / 8})")

m = oracles.exact_moments(2, 1.0)
print("moments at n=2, t=1:", {k: m[k] for k in ("ES", "ER", "VarS", "VarR")})
print(f"c_4 = {oracles.centring_constant(4)}")
print(f"returns overshoot mean at k=3: {oracles.tau_overshoot_mean(3)}")
print(f"Bessel atom e^(-6/4) = {oracles.bessel_atom(6.0, 4):.6f}")

law = oracles.nonvisit_count_law(TreeShape(TreeKind.REGULAR, 4),
                                 [VertexRef(TreeKind.REGULAR, 4, i) for i in (0, 8)], 4.0)
print("law of the number of unvisited leaves among two far-apart leaves:", law.round(4))
print(f"first-moment bound at n=10, t=0: {oracles.first_moment_bound(10, 0.0, 0.0):.1f} (2^10 e = {1024 * math.e:.1f})")
