"""Pilot for the vertical speed bound.

Estimates the mean of W_n / n (directed, exponential(1), n = 256, cycle(1024))
with a pilot seed and proposes a bound: the estimate plus five pilot SEs,
rounded up to two decimals, and never above 0.95.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

from edenfpp.groups import GroupSpec
from edenfpp.lattice import LatticeWindow
from edenfpp.stats import EstimatorConfig, _vertical_rows, map_chunks

PILOT_SEED = 9301
N = 1000
LEVELS = [16, 32, 64, 128, 256]


def main(out: Path) -> dict:
    window = LatticeWindow(GroupSpec.cycle(1024), "directed", LEVELS[-1])
    cfg = EstimatorConfig(window, seed=PILOT_SEED, replicas=N, chunk=16)
    import numpy as np
    W = np.array(map_chunks(_vertical_rows, cfg, LEVELS, 0))
    per = []
    for j, n in enumerate(LEVELS):
        r = W[:, j] / n
        per.append({"n": n, "mean_ratio": float(r.mean()),
                    "se": float(r.std(ddof=1) / math.sqrt(N))})
    last = per[-1]
    bound = min(0.95, math.ceil(100 * (last["mean_ratio"] + 5 * last["se"])) / 100)
    res = {"seed": PILOT_SEED, "replicas": N, "per_n": per, "proposed_bound": bound}
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "vertical.json"
    print(json.dumps(main(dest), indent=2))
