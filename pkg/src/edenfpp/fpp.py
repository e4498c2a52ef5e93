"""Passage times to the base layer, geodesic forests and brute-force oracles."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import groups
from ._kernels import dijkstra
from .errors import (OracleBudgetError, OutOfWindowError, UnreachableError,
                     VariantMismatchError)
from .lattice import DIRECTED, UNDIRECTED, LatticeWindow, VertexId

DEFAULT_ORACLE_BUDGET = 10**6


# ---------------------------------------------------------------------------
# data types


@dataclass(eq=False)
class PassageTimeMap:
    """Distance of every window vertex to level 0 plus the geodesic forest
    links.  ``pred_w[v]`` is the weight of the edge (v, pred(v)) as queried
    from ``v``; ``pred_edge[v]`` its window edge index."""

    window: LatticeWindow
    field: object
    dist: np.ndarray
    pred: np.ndarray
    pred_edge: np.ndarray
    pred_w: np.ndarray
    metric: str

    def index(self, v) -> int:
        return self.window.vertex_index(v)

    def distance(self, v) -> float:
        return float(self.dist[self.index(v)])

    def predecessor(self, v) -> VertexId | None:
        p = self.pred[self.index(v)]
        return None if p < 0 else self.window.vertex(p)

    @cached_property
    def forest(self) -> Forest:
        return forest_from(self)


@dataclass
class Path:
    vertices: list[VertexId]
    weights: list[float]
    total_weight: float

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(eq=False)
class Forest:
    ptm: PassageTimeMap
    root: np.ndarray  # base index of the root, -1 for unreachable vertices

    @property
    def window(self) -> LatticeWindow:
        return self.ptm.window

    def root_of(self, v) -> VertexId | None:
        r = self.root[self.window.vertex_index(v)]
        return None if r < 0 else VertexId(self.window.base_elements[r], 0)

    def member_indices(self, x) -> np.ndarray:
        return np.flatnonzero(self.root == self._base(x))

    def members(self, x) -> set[VertexId]:
        return {self.window.vertex(i) for i in self.member_indices(x)}

    def level_sizes(self) -> np.ndarray:
        """(H + 1, B) matrix: entry [n, b] is w_n(T(x_b))."""
        W = self.window
        out = np.zeros((W.height + 1, W.B), dtype=np.int64)
        ok = self.root >= 0
        lv = np.arange(W.n_vertices)[ok] // W.B
        np.add.at(out, (lv, self.root[ok]), 1)
        return out

    def _base(self, x) -> int:
        if isinstance(x, VertexId):
            x = x.element
        x = groups.validate(self.window.base, x)
        b = self.window.base_index.get(x)
        if b is None:
            raise OutOfWindowError(f"{x} is not a base vertex of the window")
        return b


@dataclass
class TreeStats:
    height: int
    level_sizes: np.ndarray
    max_level_size: int
    volume: int
    displacement: int


@dataclass(eq=False)
class GrowthSet:
    t: float
    ptm: PassageTimeMap
    mask: np.ndarray
    roots: np.ndarray

    @property
    def window(self) -> LatticeWindow:
        return self.ptm.window

    def vertices(self) -> set[VertexId]:
        return {self.window.vertex(i) for i in np.flatnonzero(self.mask)}

    def __len__(self) -> int:
        return int(self.mask.sum())


# ---------------------------------------------------------------------------
# kernels


def _arc_csr(window: LatticeWindow):
    """Both orientations of every undirected edge, sorted by source vertex."""
    cache = window.__dict__.setdefault("_csr_cache", {})
    if "csr" not in cache:
        E = window.n_edges
        src = np.concatenate([window.edge_a, window.edge_b])
        dst = np.concatenate([window.edge_b, window.edge_a])
        arc_edge = np.concatenate([np.arange(E), np.arange(E)])
        forward = np.concatenate([np.ones(E, bool), np.zeros(E, bool)])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(window.n_vertices + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        cache["csr"] = (np.cumsum(indptr), dst[order].astype(np.int64),
                        arc_edge[order], forward[order])
    return cache["csr"]


def directed_passage_times(window: LatticeWindow, field, weights: np.ndarray | None = None,
                           _fault: str | None = None) -> PassageTimeMap:
    """Level-by-level minimisation: d(x, n) = min_y [w((x,n),(y,n-1)) + d(y, n-1)].

    Ties go to the first neighbour in generator order.  ``_fault`` injects a
    deliberate off-by-one neighbour shift (negative control for the oracle).
    """
    if window.variant != DIRECTED:
        raise VariantMismatchError("directed_passage_times needs a directed window")
    w = field.edge_weights(window) if weights is None else weights
    B, H = window.B, window.height
    dense = window.dense_edge
    Wd = np.full(dense.shape, np.inf)
    ok = dense >= 0
    Wd[ok] = w[dense[ok]]
    nbr = np.where(window.nbr >= 0, window.nbr, 0)
    look = np.roll(nbr, 1, axis=1) if _fault == "off-by-one" else nbr

    dist = np.zeros((H + 1, B))
    pred = np.full((H + 1, B), -1, dtype=np.int64)
    pred_edge = np.full((H + 1, B), -1, dtype=np.int64)
    pred_w = np.zeros((H + 1, B))
    rows = np.arange(B)
    for n in range(1, H + 1):
        cand = Wd[n - 1] + dist[n - 1][look]
        j = np.argmin(cand, axis=1)
        best = cand[rows, j]
        dist[n] = best
        reach = np.isfinite(best)
        pred[n] = np.where(reach, (n - 1) * B + nbr[rows, j], -1)
        pred_edge[n] = np.where(reach, dense[n - 1, rows, j], -1)
        pred_w[n] = np.where(reach, Wd[n - 1, rows, j], 0.0)
    return PassageTimeMap(window, field, dist.ravel(), pred.ravel(), pred_edge.ravel(),
                          pred_w.ravel(), "directed")


def directed_batch(window: LatticeWindow, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Directed kernel over many weight rows at once.

    ``weights`` is (N, n_edges); returns dist and root, both (N, H + 1, B).
    Row r agrees bit for bit with ``directed_passage_times`` on weights[r].
    """
    if window.variant != DIRECTED:
        raise VariantMismatchError("directed_batch needs a directed window")
    weights = np.atleast_2d(weights)
    N = weights.shape[0]
    B, H = window.B, window.height
    dense = window.dense_edge
    ok = dense >= 0
    nbr = np.where(window.nbr >= 0, window.nbr, 0)
    dist = np.zeros((N, H + 1, B))
    root = np.empty((N, H + 1, B), dtype=np.int64)
    root[:, 0] = np.arange(B)
    for n in range(1, H + 1):
        Wd = np.where(ok[n - 1], weights[:, dense[n - 1]], np.inf)
        cand = Wd + dist[:, n - 1][:, nbr]
        j = np.argmin(cand, axis=2)
        best = np.take_along_axis(cand, j[..., None], axis=2)[..., 0]
        dist[:, n] = best
        src = nbr[np.arange(B), j]
        r = np.take_along_axis(root[:, n - 1], src, axis=1)
        root[:, n] = np.where(np.isfinite(best), r, -1)
    return dist, root


def undirected_passage_times(window: LatticeWindow, field,
                             arc_weights: tuple[np.ndarray, np.ndarray] | None = None
                             ) -> PassageTimeMap:
    """Multi-source Dijkstra from every level-0 vertex (restricted metric on
    the window's levels 0..H)."""
    if window.variant != UNDIRECTED:
        raise VariantMismatchError("undirected_passage_times needs an undirected window")
    w_ab, w_ba = field.arc_weights(window) if arc_weights is None else arc_weights
    indptr, indices, arc_edge, forward = _arc_csr(window)
    # relaxing src -> dst means dst pulls from src: the edge is queried as (dst, src)
    pull = np.where(forward, w_ba[arc_edge], w_ab[arc_edge])
    sources = np.arange(window.B, dtype=np.int64)
    dist, pred, pred_arc = dijkstra(indptr, indices, pull, sources, np.inf)
    has = pred_arc >= 0
    safe = np.where(has, pred_arc, 0)
    pred_edge = np.where(has, arc_edge[safe], -1) if arc_edge.size else pred_arc.copy()
    pred_w = np.where(has, pull[safe], 0.0) if arc_edge.size else np.zeros(window.n_vertices)
    return PassageTimeMap(window, field, dist, pred, pred_edge, pred_w, "undirected-restricted")


def passage_times(window: LatticeWindow, field) -> PassageTimeMap:
    if window.variant == DIRECTED:
        return directed_passage_times(window, field)
    return undirected_passage_times(window, field)


def point_distances(window: LatticeWindow, field, center, limit: float = np.inf) -> np.ndarray:
    """Single-source distances d(center, .) in the undirected window."""
    if window.variant != UNDIRECTED:
        raise VariantMismatchError("point balls are defined on the undirected graph")
    c = window.vertex_index(center)
    w_ab, w_ba = field.arc_weights(window)
    indptr, indices, arc_edge, forward = _arc_csr(window)
    out = np.where(forward, w_ab[arc_edge], w_ba[arc_edge])
    dist, _, _ = dijkstra(indptr, indices, out, np.array([c], dtype=np.int64), float(limit))
    return dist


# ---------------------------------------------------------------------------
# derived objects


def geodesic(ptm: PassageTimeMap, v) -> Path:
    """Follow predecessors to level 0.  The total is accumulated from the
    base end, matching the kernels bit for bit."""
    i = ptm.index(v)
    if not np.isfinite(ptm.dist[i]):
        raise UnreachableError(f"{v} cannot reach level 0 inside the window")
    verts, ws = [], []
    while True:
        verts.append(ptm.window.vertex(i))
        p = ptm.pred[i]
        if p < 0:
            break
        ws.append(float(ptm.pred_w[i]))
        i = p
    total = 0.0
    for w in reversed(ws):
        total = total + w
    return Path(verts, ws, total)


def forest_from(ptm: PassageTimeMap) -> Forest:
    W = ptm.window
    n = W.n_vertices
    idx = np.arange(n)
    r = np.where(ptm.pred >= 0, ptm.pred, idx)
    while True:  # pointer doubling
        nxt = r[r]
        if np.array_equal(nxt, r):
            break
        r = nxt
    root = np.where((r < W.B) & np.isfinite(ptm.dist), r, -1)
    return Forest(ptm, root)


def level_set(forest: Forest, x, n: int) -> set[VertexId]:
    """T^n(x).  Undirected forests are recomputed on the height-n window
    because slicing a taller forest gives a different set in general."""
    W = forest.window
    if n > W.height or n < 0:
        raise OutOfWindowError(f"level {n} is outside the window (height {W.height})")
    b = forest._base(x)
    if W.variant == UNDIRECTED and n != W.height:
        sub = undirected_passage_times(W.with_height(n), forest.ptm.field)
        forest = forest_from(sub)
        W = sub.window
    lo = n * W.B
    hits = np.flatnonzero(forest.root[lo:lo + W.B] == b)
    return {VertexId(W.base_elements[h], n) for h in hits}


def level_set_sizes(window: LatticeWindow, field, n: int, weights=None) -> np.ndarray:
    """|T^n(x)| for every base x, length-B vector."""
    if window.variant == DIRECTED:
        ptm = directed_passage_times(window.with_height(n) if window.height != n else window,
                                     field, weights)
    else:
        Wn = window if window.height == n else window.with_height(n)
        ptm = undirected_passage_times(Wn, field)
    f = forest_from(ptm)
    B = ptm.window.B
    top = f.root[n * B:(n + 1) * B]
    return np.bincount(top[top >= 0], minlength=B)


def tree_stats(forest: Forest, x) -> TreeStats:
    W = forest.window
    b = forest._base(x)
    mem = forest.member_indices(x)
    levels = mem // W.B
    sizes = np.bincount(levels, minlength=W.height + 1)
    xe = W.base_elements[b]
    disp = max((groups.distance(W.base, W.base_elements[c], xe) for c in np.unique(mem % W.B)),
               default=0)
    return TreeStats(int(levels.max()), sizes, int(sizes.max()), int(mem.size), int(disp))


def growth_set(ptm: PassageTimeMap, t: float) -> GrowthSet:
    """Union over x of T(x, t): all vertices with passage time below t."""
    if not t > 0:
        raise ValueError("growth time must be positive")
    mask = ptm.dist < t
    roots = np.where(mask, ptm.forest.root, -1)
    return GrowthSet(float(t), ptm, mask, roots)


def fpp_ball(window: LatticeWindow, field, center, t: float) -> set[VertexId]:
    """{y : d(center, y) < t} in the undirected window metric."""
    d = point_distances(window, field, center, limit=t)
    return {window.vertex(i) for i in np.flatnonzero(d < t)}


def inner_boundary_mask(mask: np.ndarray, window: LatticeWindow) -> np.ndarray:
    """Vertices of the set that have a graph neighbour outside it.  Neighbours
    beyond the window (above the cap, past a strip wall) count as outside."""
    B, H = window.B, window.height
    S = mask.reshape(H + 1, B)
    out = np.zeros_like(S)
    nbr = window.nbr
    missing = (nbr < 0).any(axis=1)
    nb_safe = np.where(nbr >= 0, nbr, 0)
    for n in range(H + 1):
        row = S[n]
        if not row.any():
            continue
        up = S[n + 1] if n < H else np.zeros(B, bool)
        if window.variant == UNDIRECTED:
            bad = ~up
            if n >= 1:
                bad |= ~S[n - 1]
                bad |= missing | ~(S[n][nb_safe].all(axis=1))
        else:
            bad = missing | ~up[nb_safe].all(axis=1) if n < H else np.ones(B, bool)
            if n >= 1:
                bad |= ~S[n - 1][nb_safe].all(axis=1)
        out[n] = row & bad
    return out.ravel()


def inner_boundary(S, window: LatticeWindow) -> set[VertexId]:
    if isinstance(S, np.ndarray):
        mask = S.astype(bool)
    else:
        mask = np.zeros(window.n_vertices, dtype=bool)
        for v in S:
            mask[window.vertex_index(v)] = True
    return {window.vertex(i) for i in np.flatnonzero(inner_boundary_mask(mask, window))}


# ---------------------------------------------------------------------------
# brute-force oracle


def _enumerate_paths(window: LatticeWindow, start: int, budget: int) -> list[list[int]]:
    """Every directed path (directed) or simple path (undirected) from
    ``start`` to level 0, as signed edge steps listed from ``start``:
    ``e`` means the edge is queried as (a, b), ``~e`` as (b, a)."""
    cache = window.__dict__.setdefault("_oracle_paths", {})
    if start in cache:
        return cache[start]
    B = window.B
    adj: dict[int, list[tuple[int, int]]] = {}
    for e, (a, b) in enumerate(zip(window.edge_a.tolist(), window.edge_b.tolist())):
        adj.setdefault(a, []).append((b, e))
        if window.variant == UNDIRECTED:
            adj.setdefault(b, []).append((a, ~e))
    paths: list[list[int]] = []
    count = 0
    on_path = {start}
    steps: list[int] = []

    def walk(u: int) -> None:
        nonlocal count
        if u < B:
            count += 1
            if count > budget:
                raise OracleBudgetError(f"more than {budget} paths from vertex {start}")
            paths.append(list(steps))
            return
        for v, s in adj.get(u, ()):
            if v in on_path:
                continue
            on_path.add(v)
            steps.append(s)
            walk(v)
            steps.pop()
            on_path.discard(v)

    walk(start)
    cache[start] = paths
    return paths


def _path_matrix(window: LatticeWindow, start: int, budget: int) -> np.ndarray:
    cache = window.__dict__.setdefault("_oracle_mats", {})
    if start not in cache:
        paths = _enumerate_paths(window, start, budget)
        E = window.n_edges
        sentinel = 2 * E
        L = max((len(p) for p in paths), default=0)
        mat = np.full((len(paths), L), sentinel, dtype=np.int64)
        for i, p in enumerate(paths):
            # stored from the base end so sums accumulate like the kernels
            row = [s if s >= 0 else E + ~s for s in reversed(p)]
            mat[i, :len(row)] = row
        cache[start] = mat
    return cache[start]


def brute_force_passage_time(window: LatticeWindow, field, v,
                             budget: int = DEFAULT_ORACLE_BUDGET, arc_weights=None) -> float:
    """Exact minimum over the enumerated path set Γ(v, level 0)."""
    start = window.vertex_index(v)
    if start < window.B:
        return 0.0
    mat = _path_matrix(window, start, budget)
    if mat.shape[0] == 0:
        return math.inf
    w_ab, w_ba = field.arc_weights(window) if arc_weights is None else arc_weights
    table = np.concatenate([w_ab, w_ba, [0.0]])
    acc = np.zeros(mat.shape[0])
    for col in range(mat.shape[1]):
        acc = acc + table[mat[:, col]]
    return float(acc.min())


def oracle_distances(window: LatticeWindow, field, budget: int = DEFAULT_ORACLE_BUDGET) -> np.ndarray:
    aw = field.arc_weights(window)
    return np.array([brute_force_passage_time(window, field, window.vertex(i), budget, aw)
                     for i in range(window.n_vertices)])


def oracle_comparison(window: LatticeWindow, seeds, dist=None, budget: int = DEFAULT_ORACLE_BUDGET,
                      fault: str | None = None, tol: float = 1e-12) -> dict:
    """Kernel against exhaustive enumeration for every vertex and seed."""
    from .lattice import DistributionSpec, WeightField
    dist = dist or DistributionSpec.exponential()
    if fault is not None and window.variant != DIRECTED:
        raise VariantMismatchError("fault injection lives in the directed kernel")
    worst, worst_at = 0.0, None
    for s in seeds:
        field_ = WeightField(int(s), dist)
        if window.variant == DIRECTED:
            ptm = directed_passage_times(window, field_, _fault=fault)
        else:
            ptm = undirected_passage_times(window, field_)
        ref = oracle_distances(window, field_, budget)
        both_inf = np.isinf(ref) & np.isinf(ptm.dist)
        diff = np.where(both_inf, 0.0, np.abs(ref - ptm.dist))
        diff = np.where(np.isnan(diff), np.inf, diff)
        i = int(np.argmax(diff))
        if diff[i] > worst or worst_at is None:
            worst, worst_at = float(diff[i]), (int(s), i)
    s, i = worst_at
    v = window.vertex(i)
    return {"window": window.to_json(), "seeds": len(list(seeds)), "max_abs_diff": worst,
            "worst_seed": s, "worst_vertex": f"{groups.element_key(window.base, v.element)}@{v.level}",
            "tolerance": tol, "pass": bool(worst <= tol), "fault": fault}


# ---------------------------------------------------------------------------
# truncation control


@dataclass
class StabilizationReport:
    height_a: int
    height_b: int
    region_height: int
    compared: int
    differing: int

    @property
    def fraction(self) -> float:
        return self.differing / self.compared if self.compared else 0.0

    def to_json(self) -> dict:
        return {"height_a": self.height_a, "height_b": self.height_b,
                "region_height": self.region_height, "compared": self.compared,
                "differing": self.differing, "fraction": self.fraction}


def stabilization_check(window_a: LatticeWindow, window_b: LatticeWindow, field,
                        region_height: int) -> StabilizationReport:
    """Fraction of vertices at levels <= region_height whose (distance, root)
    differ between two windows sharing the base and boundary."""
    if region_height > min(window_a.height, window_b.height):
        raise OutOfWindowError("region must lie inside both windows")
    if window_a.base_elements != window_b.base_elements:
        raise ValueError("windows must share their base elements")
    pa, pb = passage_times(window_a, field), passage_times(window_b, field)
    k = (region_height + 1) * window_a.B
    ra, rb = pa.forest.root[:k], pb.forest.root[:k]
    diff = (pa.dist[:k] != pb.dist[:k]) | (ra != rb)
    return StabilizationReport(window_a.height, window_b.height, region_height, k, int(diff.sum()))


# ---------------------------------------------------------------------------
# snapshot export


CSV_COLUMNS = ("element", "level", "distance", "predecessor", "root")


def _fmt(x: float) -> str:
    return "inf" if not np.isfinite(x) else format(float(x), ".17g")


def forest_csv(forest: Forest) -> str:
    W = forest.window
    keys = [groups.element_key(W.base, x) for x in W.base_elements]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    ptm = forest.ptm
    for i in range(W.n_vertices):
        n, b = divmod(i, W.B)
        p = ptm.pred[i]
        pk = "" if p < 0 else f"{keys[p % W.B]}@{p // W.B}"
        r = forest.root[i]
        wr.writerow((keys[b], n, _fmt(ptm.dist[i]), pk, "" if r < 0 else keys[r]))
    return buf.getvalue()


def write_forest_csv(forest: Forest, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(forest_csv(forest))


@dataclass
class ForestTable:
    """A forest read back from CSV (no weights attached)."""

    window: LatticeWindow
    dist: np.ndarray
    pred: np.ndarray
    root: np.ndarray = field(repr=False)


def read_forest_csv(window: LatticeWindow, path) -> ForestTable:
    dist = np.full(window.n_vertices, np.inf)
    pred = np.full(window.n_vertices, -1, dtype=np.int64)
    root = np.full(window.n_vertices, -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            x = groups.parse_element_key(window.base, row["element"])
            i = window.vertex_index(VertexId(x, int(row["level"])))
            dist[i] = float(row["distance"])
            if row["predecessor"]:
                pk, pl = row["predecessor"].rsplit("@", 1)
                pred[i] = window.vertex_index(
                    VertexId(groups.parse_element_key(window.base, pk), int(pl)))
            if row["root"]:
                root[i] = window.base_index[groups.parse_element_key(window.base, row["root"])]
    return ForestTable(window, dist, pred, root)
