"""Pilot for the replica budget of the tail-divergence campaign.

With a pilot seed, computes capped means of w(T(0)) and 2h+1 on the directed
Z strip for caps 64/128/256, then proposes the smallest replica count (rounded
up to a multiple of 500) for which every gap between consecutive caps is at
least twice the sum of the two 1-SE half widths.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

from edenfpp.groups import GroupSpec
from edenfpp.lattice import Boundary, LatticeWindow
from edenfpp.stats import TAIL_STATISTICS, EstimatorConfig, tail_reports

PILOT_SEED = 9201
N = 1000
CAPS = (64, 128, 256)
SAFETY = 2.0


def main(out: Path) -> dict:
    H = CAPS[-1]
    window = LatticeWindow(GroupSpec.integer_lattice(1), "directed", H, Boundary.strip(2 * H))
    cfg = EstimatorConfig(window, seed=PILOT_SEED, replicas=N, chunk=8)
    res = {"seed": PILOT_SEED, "replicas": N, "caps": list(CAPS)}
    need = 0
    reports = tail_reports(cfg, TAIL_STATISTICS, CAPS)
    for stat, rep in reports.items():
        per = rep.details["per_cap"]
        for p, q in zip(per, per[1:]):
            gap = q["mean"] - p["mean"]
            ratio = SAFETY * (p["se"] + q["se"]) / gap
            need = max(need, math.ceil(N * ratio**2))
        res[stat] = per
    res["proposed_replicas"] = max(500, 500 * math.ceil(need / 500))
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "tails.json"
    print(json.dumps(main(dest), indent=2))
