"""Pilot for the survival decay factor of directed trees.

Runs the directed cycle(1024) campaign with pilot seeds (disjoint from the
acceptance seed) and proposes a conservative factor: the pooled ratio
survival(8) / survival(64) minus three standard errors, rounded down to one
decimal.  The error combines the pilot's own delta-method SE with the SE
expected from an acceptance run of N replicas.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

from edenfpp.groups import GroupSpec
from edenfpp.lattice import LatticeWindow
from edenfpp.stats import EstimatorConfig, survival_curve

PILOT_SEEDS = (9101, 9102)
N = 2000


def main(out: Path) -> dict:
    window = LatticeWindow(GroupSpec.cycle(1024), "directed", 64)
    alive = []
    for seed in PILOT_SEEDS:
        cfg = EstimatorConfig(window, seed=seed, replicas=N, chunk=16)
        alive.append(survival_curve(cfg, None, [8, 64]).alive)
    a = np.vstack(alive).astype(float)
    p8, p64 = a.mean(axis=0)
    n = a.shape[0]
    ratio = p8 / p64
    # delta method for a ratio of correlated means
    cov = np.cov(a.T, ddof=1) / n
    var = ratio**2 * (cov[0, 0] / p8**2 + cov[1, 1] / p64**2 - 2 * cov[0, 1] / (p8 * p64))
    se = math.sqrt(var)
    se_accept = se * math.sqrt(n / N)
    proposal = math.floor(10 * (ratio - 3 * math.hypot(se, se_accept))) / 10
    res = {"seeds": list(PILOT_SEEDS), "replicas": n, "survival_8": p8, "survival_64": p64,
           "ratio": ratio, "ratio_se": se, "acceptance_se": se_accept, "proposed_factor": proposal}
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "survival.json"
    print(json.dumps(main(dest), indent=2))
