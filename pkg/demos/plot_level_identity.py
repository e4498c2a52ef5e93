"""
Tree sizes per level average to one
===================================

On a periodic base the trees partition each level, and translation
invariance then forces the expected number of level-n vertices in the tree
of a fixed root to equal one.  This demo estimates that mean on the
directed graph and shows how rarely a single tree survives to high levels.
"""

from __future__ import annotations

from edenfpp import stats
from edenfpp.groups import GroupSpec
from edenfpp.lattice import LatticeWindow

# %%
# A campaign is described by an EstimatorConfig.  Replica r uses a weight
# field keyed by derive_seed(seed, r), so campaigns can be split or resumed.
config = stats.EstimatorConfig(LatticeWindow(GroupSpec.cycle(64), "directed", 32),
                               seed=7, replicas=2000)

# %%
# The mean is one at every level, while the survival probability falls.
means, audit = stats.estimate_level_means(config, None, [1, 4, 16, 32])
curve = stats.survival_curve(config, None, [1, 4, 16, 32])
for (n, est), alive in zip(means.items(), curve.fraction):
    print(f"n={n:2d}  E w_n = {est.mean:.3f} +- {est.se:.3f}   P(alive) = {alive:.3f}")
print(f"partition audit exact in {audit['exact']} of {audit['replicas']} replicas")

# %%
# A surviving tree must therefore be wide: conditional on survival the mean
# level size is roughly 1 / P(alive).
est = means[32]
print(f"mean width at level 32 given survival: {est.mean / curve.fraction[-1]:.1f}")
