"""Centering sequences and a scaled cover-time experiment.

The limit theorems fix centerings but leave constants unknown, so the
experiment checks tightness and cross-n stability rather than limit values.
"""

from treecover.experiments import cover
from treecover.stats import centering

c = centering(100)
print(f"n=100: m_n={c.m_n:.3f}, sqrt t_C={c.sqrt_t_c:.3f}, t_A={c.t_a:.1f}, t_B={c.t_b:.1f}")

rep = cover({"n": [6, 8], "replicas": 300, "ks_n": [6, 8], "mean_n": 8}, seed=1)
for t in rep.tests:
    print(f"{'PASS' if t.passed else 'FAIL'}  {t.name:32s} {t.statistic} [{t.kind}]")
