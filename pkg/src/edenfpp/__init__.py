"""Stationary Eden growth and first-passage forests on G x Z+."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .groups import GroupSpec, ParityInfo
from .lattice import (Boundary, DistributionSpec, EdgeId, LatticeWindow, VertexId,
                      WeightField, edge_weight)
from .fpp import (Forest, PassageTimeMap, brute_force_passage_time, geodesic, growth_set,
                  inner_boundary, level_set, passage_times)

__all__ = [
    "Boundary", "DistributionSpec", "EdgeId", "Forest", "GroupSpec", "LatticeWindow",
    "ParityInfo", "PassageTimeMap", "VertexId", "WeightField", "brute_force_passage_time",
    "edge_weight", "geodesic", "growth_set", "inner_boundary", "level_set", "passage_times",
]
