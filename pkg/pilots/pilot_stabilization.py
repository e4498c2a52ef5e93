"""Pilot for the undirected truncation check.

Compares (distance, root) on levels <= 8 between heights 32 and 64 for the
standard undirected configuration (cycle(64), exponential(1)) over pilot
seeds, and records the worst and pooled differing fractions.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from edenfpp.fpp import stabilization_check
from edenfpp.groups import GroupSpec
from edenfpp.lattice import LatticeWindow, WeightField
from edenfpp.prf import derive_seed

PILOT_SEED = 9601
N = 50


def main(out: Path) -> dict:
    a = LatticeWindow(GroupSpec.cycle(64), "undirected", 32)
    b = a.with_height(64)
    fracs, differing, compared = [], 0, 0
    for r in range(N):
        rep = stabilization_check(a, b, WeightField(derive_seed(PILOT_SEED, r)), 8)
        fracs.append(rep.fraction)
        differing += rep.differing
        compared += rep.compared
    res = {"seed": PILOT_SEED, "replicas": N, "worst_fraction": max(fracs),
           "pooled_fraction": differing / compared, "acceptance_limit": 0.001}
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "stabilization.json"
    print(json.dumps(main(dest), indent=2))
