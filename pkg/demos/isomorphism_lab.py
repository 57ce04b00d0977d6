"""Local times plus a squared field against a shifted squared field.

``L_t + h^2`` and ``(h' + sqrt t)^2`` are sampled independently on the
unary-root tree and compared in law leaf by leaf and through projections.
"""

from treecover.isomorphism import iso_distribution_test

rep = iso_distribution_test(n=3, t=1.0, samples=20000, seed=5)
for t in rep.tests:
    if t.name.startswith(("marginal", "projection")):
        print(f"{t.name:22s} D={t.statistic:.4f} p={t.p:.3f} {'pass' if t.passed else 'FAIL'}")
print("all checks pass:", rep.passed)
