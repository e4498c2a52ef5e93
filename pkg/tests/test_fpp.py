from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edenfpp import fpp, groups
from edenfpp.errors import (OracleBudgetError, OutOfWindowError, UnreachableError,
                            VariantMismatchError)
from edenfpp.groups import GroupSpec
from edenfpp.lattice import (Boundary, ConstantWeightField, LatticeWindow, VertexId, WeightField,
                             edge_weight, incident_edges)

C4 = GroupSpec.cycle(4)
Z = GroupSpec.integer_lattice(1)


def V(x, n):
    return VertexId(x if isinstance(x, tuple) else (x,), n)


def path_oracle(window, field, v):
    """Independent enumeration: (min total, endpoint) over all directed or
    simple paths from v to level 0, summing from the base end."""
    best = (math.inf, None)

    def walk(u, seen, ws):
        nonlocal best
        if u.level == 0:
            total = 0.0
            for w in reversed(ws):
                total = total + w
            if total < best[0]:
                best = (total, u)
            return
        for e in incident_edges(window, u):
            nxt = e.other(u) if not e.directed else e.b
            if nxt in seen:
                continue
            walk(nxt, seen | {nxt}, ws + [edge_weight(field, (u, nxt)) if not e.directed
                                          else edge_weight(field, e)])

    walk(v, {v}, [])
    return best


def bellman_ford(window, field, center):
    """Point-to-point distances by plain relaxation sweeps."""
    verts = window.vertices()
    d = {v: math.inf for v in verts}
    c = VertexId(*center)
    d[c] = 0.0
    for _ in range(len(verts)):
        changed = False
        for v in verts:
            if d[v] == math.inf:
                continue
            for e in incident_edges(window, v):
                u = e.other(v)
                nd = d[v] + edge_weight(field, (v, u))
                if nd < d[u]:
                    d[u], changed = nd, True
        if not changed:
            break
    return d


# -- kernels vs oracle ------------------------------------------------------------------


@pytest.mark.parametrize("variant", ["directed", "undirected"])
@pytest.mark.parametrize("seed", range(5))
def test_kernel_equals_enumeration(variant, seed):
    W = LatticeWindow(C4, variant, 2)
    f = WeightField(seed)
    ptm = fpp.passage_times(W, f)
    for i in range(W.n_vertices):
        v = W.vertex(i)
        d, end = path_oracle(W, f, v)
        assert ptm.dist[i] == d
        assert ptm.forest.root_of(v) == end
        assert fpp.brute_force_passage_time(W, f, v) == d


@given(seed=st.integers(0, 2**63 - 1), L=st.integers(3, 6), H=st.integers(1, 4),
       variant=st.sampled_from(["directed", "undirected"]))
def test_kernel_equals_oracle_property(seed, L, H, variant):
    if variant == "undirected" and L * H > 14:
        H = max(1, 14 // L)
    W = LatticeWindow(GroupSpec.cycle(L), variant, H)
    f = WeightField(seed)
    assert np.array_equal(fpp.passage_times(W, f).dist, fpp.oracle_distances(W, f))


def test_directed_single_column_world():
    W = LatticeWindow(GroupSpec.cycle(3), "directed", 1)
    f = WeightField(11)
    for x in range(3):
        v = V(x, 1)
        assert fpp.brute_force_passage_time(W, f, v) == min(
            edge_weight(f, e) for e in incident_edges(W, v))


def test_oracle_budget():
    W = LatticeWindow(GroupSpec.cycle(8), "undirected", 4)
    with pytest.raises(OracleBudgetError):
        fpp.brute_force_passage_time(W, WeightField(0), V(0, 4), budget=50)


def test_off_by_one_fault_is_detected():
    W = LatticeWindow(C4, "directed", 3)
    assert fpp.oracle_comparison(W, range(20))["pass"]
    assert not fpp.oracle_comparison(W, range(20), fault="off-by-one")["pass"]


def test_variant_mismatch():
    with pytest.raises(VariantMismatchError):
        fpp.directed_passage_times(LatticeWindow(C4, "undirected", 2), WeightField(0))
    with pytest.raises(VariantMismatchError):
        fpp.undirected_passage_times(LatticeWindow(C4, "directed", 2), WeightField(0))
    with pytest.raises(VariantMismatchError):
        fpp.fpp_ball(LatticeWindow(C4, "directed", 2), WeightField(0), V(0, 0), 1.0)


# -- passage-time map invariants -----------------------------------------------------------


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_map_invariants(variant):
    W = LatticeWindow(GroupSpec.cycle(9), variant, 6)
    f = WeightField(3)
    ptm = fpp.passage_times(W, f)
    B = W.B
    assert (ptm.dist[:B] == 0).all() and (ptm.pred[:B] == -1).all()
    assert (ptm.pred[B:] >= 0).all()
    for i in range(B, W.n_vertices):
        p = ptm.pred[i]
        assert ptm.dist[i] == ptm.dist[p] + ptm.pred_w[i]
        if variant == "directed":
            assert p // B == i // B - 1
    # triangle property over every edge
    w = f.edge_weights(W)
    a, b = W.edge_a, W.edge_b
    assert (ptm.dist[a] <= w + ptm.dist[b]).all()
    if variant == "undirected":
        assert (ptm.dist[b] <= w + ptm.dist[a]).all()


def test_constant_weights_directed():
    W = LatticeWindow(GroupSpec.cycle(5), "directed", 4)
    ptm = fpp.directed_passage_times(W, ConstantWeightField(0.5))
    levels = np.arange(W.n_vertices) // W.B
    assert np.array_equal(ptm.dist, 0.5 * levels)
    # ties go to the first generator (+1), so the root drifts by +1 per level
    f = ptm.forest
    for x in range(5):
        assert f.root_of(V(x, 4)) == V((x + 4) % 5, 0)


def test_single_edge_geodesic():
    # any other route leaves (x, 1) through a different edge; weights are >= 0
    W = LatticeWindow(GroupSpec.cycle(6), "undirected", 2)
    hits = 0
    for seed in range(40):
        f = WeightField(seed)
        ptm = fpp.passage_times(W, f)
        for x in range(6):
            v = V(x, 1)
            wv = edge_weight(f, (V(x, 0), v))
            others = [edge_weight(f, (v, e.other(v))) for e in incident_edges(W, v)
                      if e.other(v) != V(x, 0)]
            if wv < min(others):
                hits += 1
                assert ptm.distance(v) == wv
    assert hits > 0


# -- geodesics and forests -------------------------------------------------------------------


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_geodesic_properties(variant):
    W = LatticeWindow(GroupSpec.cycle(7), variant, 5)
    ptm = fpp.passage_times(W, WeightField(8))
    assert fpp.geodesic(ptm, V(2, 0)).total_weight == 0.0
    for i in range(W.n_vertices):
        v = W.vertex(i)
        g = fpp.geodesic(ptm, v)
        assert g.total_weight == ptm.dist[i]
        assert g.vertices[-1].level == 0
        if variant == "directed":
            assert len(g) == v.level
        for k, u in enumerate(g.vertices):  # prefix property
            assert fpp.geodesic(ptm, u).vertices == g.vertices[k:]


def test_geodesic_matches_oracle_minimum():
    W = LatticeWindow(C4, "undirected", 2)
    f = WeightField(21)
    ptm = fpp.passage_times(W, f)
    for v in W.vertices():
        assert fpp.geodesic(ptm, v).total_weight == path_oracle(W, f, v)[0]


def test_unreachable_geodesic():
    W = LatticeWindow(C4, "directed", 1)
    ptm = fpp.passage_times(W, WeightField(0))
    ptm.dist[5] = np.inf
    with pytest.raises(UnreachableError):
        fpp.geodesic(ptm, W.vertex(5))


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_forest_partition_and_closure(variant):
    W = LatticeWindow(GroupSpec.cycle(8), variant, 6)
    ptm = fpp.passage_times(W, WeightField(4))
    f = ptm.forest
    assert (f.root[:W.B] == np.arange(W.B)).all()
    has = ptm.pred >= 0
    assert (f.root[has] == f.root[ptm.pred[has]]).all()
    assert sum(len(f.members(x)) for x in W.base_elements) == int(np.isfinite(ptm.dist).sum())


def test_tree_stats_against_oracle_forest():
    W = LatticeWindow(GroupSpec.cycle(8), "directed", 4)
    f = WeightField(77)
    forest = fpp.passage_times(W, f).forest
    members = {x: [] for x in W.base_elements}
    for v in W.vertices():
        members[path_oracle(W, f, v)[1].element].append(v)
    for x in W.base_elements:
        ts = fpp.tree_stats(forest, x)
        levels = np.bincount([v.level for v in members[x]], minlength=5)
        assert np.array_equal(ts.level_sizes, levels)
        assert ts.height == max(v.level for v in members[x])
        assert ts.max_level_size == levels.max() and ts.volume == len(members[x])
        assert ts.displacement == max(groups.distance(W.base, v.element, x) for v in members[x])


def test_tree_stats_singleton():
    W = LatticeWindow(C4, "directed", 0)
    ts = fpp.tree_stats(fpp.passage_times(W, WeightField(1)).forest, (2,))
    assert (ts.height, ts.max_level_size, ts.volume) == (0, 1, 1)


def test_directed_partition_sum():
    W = LatticeWindow(GroupSpec.cycle(16), "directed", 6)
    sizes = fpp.passage_times(W, WeightField(5)).forest.level_sizes()
    assert (sizes.sum(axis=1) == 16).all()


# -- level sets ------------------------------------------------------------------------------


def test_level_set_basics():
    W = LatticeWindow(GroupSpec.cycle(6), "undirected", 4)
    forest = fpp.passage_times(W, WeightField(2)).forest
    assert fpp.level_set(forest, (3,), 0) == {V(3, 0)}
    with pytest.raises(OutOfWindowError):
        fpp.level_set(forest, (3,), 5)


def test_directed_level_set_definition():
    W = LatticeWindow(GroupSpec.cycle(6), "directed", 3)
    f = WeightField(13)
    forest = fpp.passage_times(W, f).forest
    for x in W.base_elements:
        want = {v for v in W.vertices(3) if path_oracle(W, f, v)[1].element == x}
        assert fpp.level_set(forest, x, 3) == want


def test_undirected_level_set_uses_restricted_window():
    W = LatticeWindow(GroupSpec.cycle(10), "undirected", 8)
    f = WeightField(6)
    forest = fpp.passage_times(W, f).forest
    sub = fpp.passage_times(W.with_height(3), f).forest
    for x in W.base_elements:
        assert fpp.level_set(forest, x, 3) == {v for v in sub.members(x) if v.level == 3}
    sizes = fpp.level_set_sizes(W, f, 3)
    assert sizes.sum() == 10


# -- growth sets, balls, boundaries ------------------------------------------------------------


def test_growth_set_examples():
    W = LatticeWindow(C4, "undirected", 2)
    f = WeightField(9)
    ptm = fpp.passage_times(W, f)
    t0 = ptm.dist[W.B:2 * W.B].min()
    assert fpp.growth_set(ptm, t0).vertices() == set(W.vertices(0))
    big = fpp.growth_set(ptm, ptm.dist.max() + 1)
    assert len(big) == W.n_vertices
    gs = fpp.growth_set(ptm, 2.0)
    assert gs.vertices() == {v for v in W.vertices() if path_oracle(W, f, v)[0] < 2.0}
    with pytest.raises(ValueError):
        fpp.growth_set(ptm, 0.0)


@given(s=st.floats(0.01, 5), dt=st.floats(0, 5), seed=st.integers(0, 1000))
def test_growth_monotone(s, dt, seed):
    W = LatticeWindow(GroupSpec.cycle(6), "undirected", 5)
    ptm = fpp.passage_times(W, WeightField(seed))
    a, b = fpp.growth_set(ptm, s).mask, fpp.growth_set(ptm, s + dt).mask
    assert not (a & ~b).any()


def test_fpp_ball_examples():
    W = LatticeWindow(GroupSpec.cycle(3), "undirected", 3)
    f = WeightField(31)
    c = V(1, 2)
    wmin = min(edge_weight(f, (c, e.other(c))) for e in incident_edges(W, c))
    assert fpp.fpp_ball(W, f, c, wmin) == {c}
    d = bellman_ford(W, f, c)
    for t in (0.3, 1.0, 2.5):
        assert fpp.fpp_ball(W, f, c, t) == {v for v, dv in d.items() if dv < t}


@pytest.mark.parametrize("seed", range(10))
def test_union_of_balls_is_growth_set(seed):
    W = LatticeWindow(GroupSpec.cycle(8), "undirected", 5)
    f = WeightField(seed)
    ptm = fpp.passage_times(W, f)
    for t in (0.5, 1.0, 2.0):
        balls = set().union(*(fpp.fpp_ball(W, f, v, t) for v in W.vertices(0)))
        assert balls == fpp.growth_set(ptm, t).vertices()


def _scan_boundary(S, W):
    return {v for v in S if any(u not in S for u in W.graph_neighbors(v))}


def test_inner_boundary_examples():
    W = LatticeWindow(GroupSpec.cycle(5), "undirected", 3)
    assert fpp.inner_boundary({V(2, 1)}, W) == {V(2, 1)}
    assert fpp.inner_boundary(set(W.vertices()), W) == set(W.vertices(3))
    S = LatticeWindow(Z, "undirected", 2, Boundary.strip(2))
    full = set(S.vertices())
    walls = {v for v in full if v.level == 2 or (abs(v.element[0]) == 2 and v.level >= 1)}
    assert fpp.inner_boundary(full, S) == walls


@pytest.mark.parametrize("variant", ["directed", "undirected"])
@pytest.mark.parametrize("t", [0.7, 1.5, 3.0])
def test_inner_boundary_matches_scan(variant, t):
    W = LatticeWindow(GroupSpec.cycle(7), variant, 6)
    gs = fpp.growth_set(fpp.passage_times(W, WeightField(12)), t)
    S = gs.vertices()
    assert fpp.inner_boundary(S, W) == _scan_boundary(S, W)


# -- truncation control and export ---------------------------------------------------------------


def test_stabilization_directed_exact():
    a = LatticeWindow(GroupSpec.cycle(40), "directed", 8)
    rep = fpp.stabilization_check(a, a.with_height(16), WeightField(3), 8)
    assert rep.differing == 0
    assert fpp.stabilization_check(a, a, WeightField(3), 4).fraction == 0.0


def test_stabilization_undirected_standard_config():
    a = LatticeWindow(GroupSpec.cycle(64), "undirected", 32)
    rep = fpp.stabilization_check(a, a.with_height(64), WeightField(2026), 8)
    assert rep.fraction <= 0.001


def test_forest_csv_round_trip(tmp_path):
    W = LatticeWindow(GroupSpec.free_group(2), "undirected", 2, Boundary.strip(2))
    ptm = fpp.passage_times(W, WeightField(4))
    p = tmp_path / "forest.csv"
    fpp.write_forest_csv(ptm.forest, p)
    table = fpp.read_forest_csv(W, p)
    assert np.array_equal(table.dist, ptm.dist)
    assert np.array_equal(table.pred, ptm.pred)
    assert np.array_equal(table.root, ptm.forest.root)
    assert fpp.forest_csv(ptm.forest) == p.read_text()


def test_directed_batch_agrees():
    from edenfpp.lattice import DistributionSpec, edge_weight_matrix
    W = LatticeWindow(Z, "directed", 6, Boundary.strip(9))
    seeds = [1, 2, 3]
    d, r = fpp.directed_batch(W, edge_weight_matrix(W, DistributionSpec.exponential(), seeds))
    for i, s in enumerate(seeds):
        p = fpp.directed_passage_times(W, WeightField(s))
        assert np.array_equal(d[i].ravel(), p.dist)
        assert np.array_equal(r[i].ravel(), p.forest.root)
