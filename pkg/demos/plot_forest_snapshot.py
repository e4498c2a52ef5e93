"""
Geodesic forest on a cycle
==========================

Every vertex of the half-cylinder is joined to level 0 by its geodesic, and
the geodesics glue into a forest with one tree per base vertex.  Here we
draw that forest for the undirected graph over a cycle of 64 sites with
exponential weights, and check how many trees still reach the top row.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from edenfpp import fpp, render
from edenfpp.groups import GroupSpec
from edenfpp.lattice import LatticeWindow, WeightField

OUT = Path(__file__).with_name("output")

# %%
# Build the window and the weight field.  The field is a keyed function of
# the seed, so the same seed always gives the same picture.
window = LatticeWindow(GroupSpec.cycle(64), "undirected", 64)
field = WeightField(seed=2024)
ptm = fpp.passage_times(window, field)
forest = ptm.forest

# %%
# Level sizes: entry [n, b] counts the level-n vertices in the tree of b.
# Each row sums to 64 because the trees partition every level.
sizes = forest.level_sizes()
assert np.all(sizes.sum(axis=1) == window.B)
for n in (1, 4, 16, 64):
    alive = int((sizes[n] > 0).sum())
    print(f"level {n:2d}: {alive:2d} trees present, widest {sizes[n].max()}")

# %%
# Draw it.  The legend maps each root key to its colour; it is written next
# to the SVG so the picture can be read back.
style = render.StyleConfig(cell=6, geodesics=True)
svg = render.render_forest(forest, style)
path = render.write_svg(svg, OUT / "forest.svg", render.legend(window, forest.root, style))
print(f"wrote {path}")

# %%
# The growth set at time t is everything with passage time below t.  Its
# inner boundary is outlined in the second picture.
gs = fpp.growth_set(ptm, 8.0)
svg = render.render_growth(gs, style)
path = render.write_svg(svg, OUT / "growth_t8.svg", render.legend(window, gs.roots, style))
print(f"growth set at t=8 holds {len(gs)} vertices; wrote {path}")
