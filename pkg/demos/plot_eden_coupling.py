"""
Eden growth from exponential passage times
==========================================

With exponential weights, adding vertices in order of passage time is the
same in law as the Eden chain, which adds a uniformly chosen boundary edge
at each step.  We compare both against the exact law on a tiny window and
show that uniform weights break the match.
"""

from __future__ import annotations

import warnings

from edenfpp import dynamics
from edenfpp.groups import GroupSpec
from edenfpp.lattice import DistributionSpec, LatticeWindow

window = LatticeWindow(GroupSpec.cycle(3), "undirected", 2)

# %%
# The exact law of the first two additions, from enumeration with rational
# arithmetic.
exact = dynamics.exact_chain_distribution(window, 2)
print(f"{len(exact)} possible two-step histories")

# %%
# Sample the chain directly and through the passage-time coupling.
N = 50_000
chain = dynamics.chain_distribution(window, 2, N, seed=1)
coupled = dynamics.coupling_distribution(window, DistributionSpec.exponential(), 2, N, seed=1)
for name, emp in (("chain", chain), ("coupling", coupled)):
    res = dynamics.compare_to_exact(emp, exact, N)
    print(f"{name:8s}: chi2 p = {res['p_value']:.3f}, max |z| = {res['max_abs_z']:.2f}")

# %%
# Memorylessness is what makes the coupling work.  Uniform weights remember
# how long an edge has waited, so the conditional next-step law is skewed.
bigger = LatticeWindow(GroupSpec.cycle(5), "undirected", 3)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    for dist in (DistributionSpec.exponential(), DistributionSpec.uniform()):
        rep = dynamics.memorylessness_test(bigger, 3, N, seed=2, dist=dist)
        ps = ", ".join(f"{s['p_value']:.2g}" for s in rep["steps"])
        print(f"{dist.kind:11s}: step p-values {ps}")
