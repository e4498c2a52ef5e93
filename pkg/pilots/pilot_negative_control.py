"""Pilot for the power of the memorylessness test against uniform(0,1)
weights on cycle(5), height 3.

Repeats the campaign with independent base seeds and reports the fraction
of repetitions in which some step rejects uniformity at p < 0.001.
"""

from __future__ import annotations

import json
import sys
import warnings
from pathlib import Path

from edenfpp.dynamics import memorylessness_test
from edenfpp.groups import GroupSpec
from edenfpp.lattice import DistributionSpec, LatticeWindow

PILOT_SEED = 9501
REPETITIONS = 20
N = 100_000
STEPS = 3


def main(out: Path) -> dict:
    window = LatticeWindow(GroupSpec.cycle(5), "undirected", 3)
    control = DistributionSpec.uniform(0.0, 1.0)
    rejected = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for rep in range(REPETITIONS):
            r = memorylessness_test(window, STEPS, N, PILOT_SEED + rep, control)
            rejected.append(min(s["p_value"] for s in r["steps"]) < 1e-3)
    res = {"seed": PILOT_SEED, "repetitions": REPETITIONS, "replicas": N, "steps": STEPS,
           "rejection_rate": sum(rejected) / REPETITIONS}
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "negative_control.json"
    print(json.dumps(main(dest), indent=2))
