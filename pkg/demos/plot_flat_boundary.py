"""
The growth front flattens
=========================

Over the integer line the growth set at time t has an upper boundary whose
height grows linearly in t.  Rescaled by t, the central part of that
boundary becomes flat.  This demo measures the rescaled profile at three
times and draws the largest one with a band around the fitted speed.
"""

from __future__ import annotations

from pathlib import Path

from edenfpp import fpp, render, stats
from edenfpp.lattice import WeightField

OUT = Path(__file__).with_name("output")

# %%
# shape_window picks a strip tall enough that growth never reaches the cap.
window = stats.shape_window(100)
field = WeightField(seed=5)
profiles = stats.shape_profile_single(window, field, [25, 50, 100])
for p in profiles:
    print(f"t={p.t:5.0f}  speed {p.d_hat:.3f}  max deviation {p.max_deviation:.3f}")

# %%
# Draw the last time with band lines at t (speed -/+ deviation).
last = profiles[-1]
gs = fpp.growth_set(fpp.passage_times(window, field), last.t)
style = render.StyleConfig(cell=2)
svg = render.render_growth(gs, style, band=(last.d_hat, last.max_deviation))
path = render.write_svg(svg, OUT / "front_t100.svg", render.legend(window, gs.roots, style))
print(f"wrote {path}")
