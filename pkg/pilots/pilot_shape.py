"""Pilot for the flat-boundary campaign.

Checks that the standard Z-strip window (height 600, radius 400) contains the
growth up to t = 200 for pilot seeds, and records the observed deviation
trend and the relative change of the speed estimate between t = 100 and 200.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from edenfpp.stats import EstimatorConfig, shape_profile, shape_window

PILOT_SEED = 9401
N = 10
TIMES = (50.0, 100.0, 200.0)


def main(out: Path) -> dict:
    window = shape_window(TIMES[-1])
    cfg = EstimatorConfig(window, seed=PILOT_SEED, replicas=N, chunk=1)
    rep = shape_profile(cfg, TIMES, central_fraction=0.5)
    res = {"seed": PILOT_SEED, "replicas": N, "height": window.height,
           "radius": window.boundary.radius, **rep.details}
    out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return res


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "results" / "shape.json"
    print(json.dumps(main(dest), indent=2))
