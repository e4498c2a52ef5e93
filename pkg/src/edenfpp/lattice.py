"""Finite windows onto G x Z+ and the lazy deterministic weight field.

Vertex ``(x, n)`` of a window gets the flat index ``n * B + b`` where ``b``
is the position of ``x`` in the canonically sorted list of base elements, so
index order is the canonical vertex order (level first, then element).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import stats as sps

from . import groups
from .errors import ConfigError, DomainError, OutOfWindowError
from .groups import Element, GroupSpec
from .prf import DOMAIN_WEIGHTS, domain_key, uniform_words, uniform_words_multi

DIRECTED = "directed"
UNDIRECTED = "undirected"
_VARIANT_TAG = {DIRECTED: 0, UNDIRECTED: 1}


class VertexId(NamedTuple):
    element: Element
    level: int

    def words(self) -> tuple[int, ...]:
        return (self.level, *groups.element_words(self.element))

    def sort_key(self) -> tuple:
        return (self.level, groups.order_key(self.element))


@dataclass(frozen=True)
class EdgeId:
    """Canonical edge.  Directed edges store (upper, lower); undirected
    edges store their endpoints in canonical vertex order."""

    a: VertexId
    b: VertexId
    directed: bool

    @classmethod
    def down(cls, upper: VertexId, lower: VertexId) -> EdgeId:
        if upper.level != lower.level + 1:
            raise ValueError("directed edges go down exactly one level")
        return cls(upper, lower, True)

    @classmethod
    def undirected(cls, u: VertexId, v: VertexId) -> EdgeId:
        u, v = VertexId(*u), VertexId(*v)
        if abs(u.level - v.level) > 1 or (u.level == v.level and u.level < 1):
            raise ValueError(f"{u} and {v} are not joined by an undirected edge")
        if u.sort_key() > v.sort_key():
            u, v = v, u
        return cls(u, v, False)

    def words(self) -> tuple[int, ...]:
        tag = _VARIANT_TAG[DIRECTED if self.directed else UNDIRECTED]
        return (tag, *self.a.words(), *self.b.words())

    def other(self, v: VertexId) -> VertexId:
        if v == self.a:
            return self.b
        if v == self.b:
            return self.a
        raise ValueError(f"{v} is not an endpoint of {self}")


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: tuple[tuple[str, float], ...] = ()

    KINDS = ("exponential", "uniform", "weibull")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ConfigError(
                f"distribution {self.kind!r} is not allowed: edge weights must follow a "
                f"non-atomic law on [0, inf) with finite mean (one of {', '.join(self.KINDS)})")
        p = self.p
        if self.kind == "exponential" and not p.get("rate", 0) > 0:
            raise ConfigError("exponential needs rate > 0")
        if self.kind == "uniform" and not 0 <= p.get("a", -1) < p.get("b", -1):
            raise ConfigError("uniform(a, b) needs 0 <= a < b (a = b would be an atom)")
        if self.kind == "weibull" and not (p.get("shape", 0) > 0 and p.get("scale", 0) > 0):
            raise ConfigError("weibull needs shape > 0 and scale > 0")

    @property
    def p(self) -> dict[str, float]:
        return dict(self.params)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> DistributionSpec:
        return cls("exponential", (("rate", float(rate)),))

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> DistributionSpec:
        return cls("uniform", (("a", float(a)), ("b", float(b))))

    @classmethod
    def weibull(cls, shape: float, scale: float = 1.0) -> DistributionSpec:
        return cls("weibull", (("scale", float(scale)), ("shape", float(shape))))

    @property
    def mean(self) -> float:
        p = self.p
        if self.kind == "exponential":
            return 1.0 / p["rate"]
        if self.kind == "uniform":
            return 0.5 * (p["a"] + p["b"])
        return p["scale"] * math.gamma(1.0 + 1.0 / p["shape"])

    def scipy(self):
        p = self.p
        if self.kind == "exponential":
            return sps.expon(scale=1.0 / p["rate"])
        if self.kind == "uniform":
            return sps.uniform(loc=p["a"], scale=p["b"] - p["a"])
        return sps.weibull_min(p["shape"], scale=p["scale"])

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.p}

    @classmethod
    def from_json(cls, obj: dict) -> DistributionSpec:
        kind = obj.get("kind")
        params = obj.get("params", {}) or {}
        if kind not in cls.KINDS:
            cls(str(kind))  # raises with the non-atomic message
        try:
            return cls(kind, tuple(sorted((str(k), float(v)) for k, v in params.items())))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad distribution parameters {params!r}") from exc


def inverse_cdf(dist: DistributionSpec, u):
    """Quantile function; accepts scalars or arrays with entries in [0, 1)."""
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~((arr >= 0.0) & (arr < 1.0))):
        raise DomainError("quantile argument must lie in [0, 1)")
    p = dist.p
    if dist.kind == "exponential":
        out = -np.log1p(-arr) / p["rate"]
    elif dist.kind == "uniform":
        out = p["a"] + (p["b"] - p["a"]) * arr
    else:
        out = p["scale"] * (-np.log1p(-arr)) ** (1.0 / p["shape"])
    out = out + 0.0  # normalise -0.0
    return float(out) if np.ndim(u) == 0 else out


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class Boundary:
    mode: str = "periodic"
    radius: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("periodic", "strip"):
            raise ConfigError(f"unknown boundary mode {self.mode!r}")
        if self.mode == "strip" and (self.radius is None or self.radius < 0):
            raise ConfigError("strip boundary needs a radius >= 0")

    @classmethod
    def periodic(cls) -> Boundary:
        return cls("periodic")

    @classmethod
    def strip(cls, radius: int) -> Boundary:
        return cls("strip", int(radius))

    def to_json(self) -> dict:
        if self.mode == "periodic":
            return {"mode": "periodic"}
        return {"mode": "strip", "radius": self.radius}


class LatticeWindow:
    """A finite piece of the directed graph (G-hat) or undirected graph
    (G-bar) over ``G x {0..H}``."""

    def __init__(self, base: GroupSpec, variant: str, height: int,
                 boundary: Boundary | None = None, center: Element | None = None):
        if variant not in _VARIANT_TAG:
            raise ConfigError(f"variant must be 'directed' or 'undirected', got {variant!r}")
        if height < 0:
            raise ConfigError("height must be non-negative")
        boundary = boundary or Boundary.periodic()
        if boundary.mode == "periodic" and not base.is_periodic:
            raise ConfigError("periodic windows need a cycle or torus base")
        self.base = base
        self.variant = variant
        self.height = int(height)
        self.boundary = boundary
        self.center = groups.validate(base, center) if center is not None else base.identity

        if boundary.mode == "periodic":
            elems = _all_elements(base)
        else:
            elems = groups.sort_elements(groups.ball(base, self.center, boundary.radius))
        self.base_elements: list[Element] = elems
        self.base_index: dict[Element, int] = {x: i for i, x in enumerate(elems)}
        self.B = len(elems)
        self.n_vertices = self.B * (self.height + 1)

        deg = base.degree
        nbr = np.full((self.B, deg), -1, dtype=np.int64)
        gens = base.generators()
        for i, x in enumerate(elems):
            for j, g in enumerate(gens):
                try:
                    y = groups.multiply(base, x, g)
                except Exception:  # word-length cap: treat as outside the window
                    continue
                nbr[i, j] = self.base_index.get(y, -1)
        self.nbr = nbr
        self._build_edges()

    # -- construction -----------------------------------------------------------
    def _build_edges(self) -> None:
        B, H, deg = self.B, self.height, self.base.degree
        if self.variant == DIRECTED:
            n = np.arange(1, H + 1).repeat(B * deg)
            b = np.tile(np.arange(B).repeat(deg), H)
            j = np.tile(np.arange(deg), B * H)
            c = np.tile(self.nbr.ravel(), H)
            keep = c >= 0
            dense = np.full(H * B * deg, -1, dtype=np.int64)
            dense[keep] = np.arange(int(keep.sum()))
            self.dense_edge = dense.reshape(H, B, deg)
            n, b, c = n[keep], b[keep], c[keep]
            self.edge_a = n * B + b          # upper endpoint
            self.edge_b = (n - 1) * B + c    # lower endpoint
        else:
            vert_a = np.arange(H * B)
            vert_b = vert_a + B
            bb = np.arange(B).repeat(deg)
            cc = self.nbr.ravel()
            pair = (cc > bb)  # each unordered pair once; cc == -1 drops out
            bb, cc = bb[pair], cc[pair]
            levels = np.arange(1, H + 1).repeat(bb.size)
            hor_a = levels * B + np.tile(bb, H)
            hor_b = levels * B + np.tile(cc, H)
            self.edge_a = np.concatenate([vert_a, hor_a])
            self.edge_b = np.concatenate([vert_b, hor_b])
            self.n_vertical = vert_a.size
        self.n_edges = int(self.edge_a.size)

    # -- vertex bookkeeping -----------------------------------------------------
    def vertex_index(self, v) -> int:
        v = VertexId(*v)
        if not 0 <= v.level <= self.height:
            raise OutOfWindowError(f"{v} is outside the window (height {self.height})")
        b = self.base_index.get(v.element if isinstance(v.element, tuple) else (v.element,))
        if b is None:
            raise OutOfWindowError(f"{v} is outside the window")
        return v.level * self.B + b

    def vertex(self, idx: int) -> VertexId:
        level, b = divmod(int(idx), self.B)
        return VertexId(self.base_elements[b], level)

    def contains(self, v) -> bool:
        try:
            self.vertex_index(v)
        except (OutOfWindowError, TypeError):
            return False
        return True

    def vertices(self, level: int | None = None) -> list[VertexId]:
        levels = range(self.height + 1) if level is None else [level]
        return [VertexId(x, n) for n in levels for x in self.base_elements]

    def level_of(self, idx):
        return np.asarray(idx) // self.B

    def base_of(self, idx):
        return np.asarray(idx) % self.B

    def edge(self, e: int) -> EdgeId:
        a, b = self.vertex(self.edge_a[e]), self.vertex(self.edge_b[e])
        return EdgeId(a, b, self.variant == DIRECTED)

    @cached_property
    def _edge_lookup(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): e for e, (a, b) in enumerate(zip(self.edge_a, self.edge_b))}

    def edge_index(self, e: EdgeId) -> int:
        key = (self.vertex_index(e.a), self.vertex_index(e.b))
        try:
            return self._edge_lookup[key]
        except KeyError:
            raise OutOfWindowError(f"{e} is not an edge of the window") from None

    def with_height(self, height: int) -> LatticeWindow:
        return LatticeWindow(self.base, self.variant, height, self.boundary, self.center)

    def with_variant(self, variant: str) -> LatticeWindow:
        return LatticeWindow(self.base, variant, self.height, self.boundary, self.center)

    def to_json(self) -> dict:
        out = {"base": self.base.to_json(), "variant": self.variant, "height": self.height,
               "boundary": self.boundary.to_json()}
        if self.center != self.base.identity:
            out["center"] = groups.element_key(self.base, self.center)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> LatticeWindow:
        try:
            base = GroupSpec.from_json(obj["base"])
            bd = obj.get("boundary") or {"mode": "periodic"}
            boundary = Boundary(bd.get("mode", "periodic"), bd.get("radius"))
            center = obj.get("center")
            if center is not None:
                center = groups.parse_element_key(base, center)
            return cls(base, obj["variant"], int(obj["height"]), boundary, center)
        except KeyError as exc:
            raise ConfigError(f"window description is missing {exc}") from None

    def __repr__(self) -> str:
        bd = "periodic" if self.boundary.mode == "periodic" else f"strip(W={self.boundary.radius})"
        return f"LatticeWindow({self.base}, {self.variant}, H={self.height}, {bd})"

    # -- canonical words for the weight field --------------------------------------
    @cached_property
    def _coords_by_length(self) -> tuple[np.ndarray, dict[int, np.ndarray]]:
        """Element lengths and, per length k, a (B, k) coordinate matrix whose
        rows are valid for the elements of that length."""
        lens = np.array([len(x) for x in self.base_elements], dtype=np.int64)
        mats = {}
        for k in np.unique(lens).tolist():
            m = np.zeros((self.B, k), dtype=np.int64)
            for i in np.flatnonzero(lens == k):
                m[i] = self.base_elements[i]
            mats[k] = m
        return lens, mats

    @cached_property
    def edge_word_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return self._word_groups(self.edge_a, self.edge_b)

    @cached_property
    def reversed_edge_word_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return self._word_groups(self.edge_b, self.edge_a)

    def _word_groups(self, first: np.ndarray, second: np.ndarray):
        """Rows of ``EdgeId.words()`` for every edge, grouped by row length."""
        tag = _VARIANT_TAG[self.variant]
        lens, mats = self._coords_by_length
        la, lb = lens[first % self.B], lens[second % self.B]
        out = []
        for ka in np.unique(la).tolist():
            for kb in np.unique(lb).tolist():
                sel = np.flatnonzero((la == ka) & (lb == kb))
                if sel.size == 0:
                    continue
                cols = [np.full(sel.size, tag, dtype=np.int64)]
                for ends, k in ((first[sel], ka), (second[sel], kb)):
                    cols.append(ends // self.B)
                    cols.append(np.full(sel.size, k, dtype=np.int64))
                    cols.extend(mats[k][ends % self.B, c] for c in range(k))
                out.append((sel, np.column_stack(cols)))
        return out

    # -- adjacency helpers -----------------------------------------------------------
    def incident_edges(self, v, upward: bool = False) -> list[EdgeId]:
        return incident_edges(self, v, upward)

    def graph_neighbors(self, v: VertexId) -> list[VertexId]:
        """Neighbours of ``v`` in the infinite graph, ignoring the window
        (undirected view; used for inner boundaries)."""
        x, n = v
        out = []
        if self.variant == UNDIRECTED:
            if n >= 1:
                out.extend(VertexId(y, n) for y in groups.neighbors(self.base, x))
                out.append(VertexId(x, n - 1))
            out.append(VertexId(x, n + 1))
        else:
            ys = groups.neighbors(self.base, x)
            if n >= 1:
                out.extend(VertexId(y, n - 1) for y in ys)
            out.extend(VertexId(y, n + 1) for y in ys)
        return out


def _all_elements(base: GroupSpec) -> list[Element]:
    grids = np.indices(base.sides).reshape(base.rank, -1).T
    return groups.sort_elements(tuple(int(c) for c in row) for row in grids)


def incident_edges(window: LatticeWindow, v, upward: bool = False) -> list[EdgeId]:
    """Window edges at ``v``.

    Directed windows list the downward edges (and, with ``upward``, the edges
    arriving from level n + 1).  Strip windows omit edges leaving the strip.
    """
    idx = window.vertex_index(v)
    v = window.vertex(idx)
    x, n = v
    b = idx % window.B
    out: list[EdgeId] = []
    nbrs = [window.base_elements[c] for c in window.nbr[b] if c >= 0]
    if window.variant == DIRECTED:
        if n >= 1:
            out.extend(EdgeId.down(v, VertexId(y, n - 1)) for y in nbrs)
        if upward and n < window.height:
            out.extend(EdgeId.down(VertexId(y, n + 1), v) for y in nbrs)
        return out
    if n >= 1:
        out.extend(EdgeId.undirected(v, VertexId(y, n)) for y in nbrs)
        out.append(EdgeId.undirected(v, VertexId(x, n - 1)))
    if n < window.height:
        out.append(EdgeId.undirected(v, VertexId(x, n + 1)))
    return out


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightField:
    """i.i.d. weights emulated by a keyed PRF of the canonical edge words.

    ``canonicalize=False`` is a negative-control hook: undirected queries
    are then hashed in the orientation they are asked in.
    """

    seed: int
    dist: DistributionSpec = field(default_factory=DistributionSpec.exponential)
    canonicalize: bool = True

    @property
    def key(self) -> int:
        return domain_key(self.seed, DOMAIN_WEIGHTS)

    def _from_words(self, words) -> np.ndarray:
        return inverse_cdf(self.dist, uniform_words(self.key, words))

    def edge_weights(self, window: LatticeWindow) -> np.ndarray:
        """Weights of all window edges, aligned with ``window.edge_a``."""
        return self._fill(window.n_edges, window.edge_word_groups)

    def arc_weights(self, window: LatticeWindow) -> tuple[np.ndarray, np.ndarray]:
        """(w_ab, w_ba): weight when the edge is queried as (a, b) or (b, a)."""
        w = self.edge_weights(window)
        if self.canonicalize or window.variant == DIRECTED:
            return w, w
        return w, self._fill(window.n_edges, window.reversed_edge_word_groups)

    def _fill(self, n: int, word_groups) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        for sel, words in word_groups:
            out[sel] = self._from_words(words)
        return out

    def weight(self, e) -> float:
        return edge_weight(self, e)


@dataclass(frozen=True)
class ConstantWeightField:
    """Degenerate test hook: every edge weighs ``value``."""

    value: float = 1.0
    seed: int = 0
    canonicalize: bool = True

    @property
    def dist(self) -> None:
        return None

    def edge_weights(self, window: LatticeWindow) -> np.ndarray:
        return np.full(window.n_edges, float(self.value))

    def arc_weights(self, window: LatticeWindow):
        w = self.edge_weights(window)
        return w, w

    def weight(self, e) -> float:
        return float(self.value)


def edge_weight(field: WeightField, e) -> float:
    """Weight of a single edge.  ``e`` is an EdgeId or an undirected (u, v)
    pair; with canonicalisation both orders give the same edge."""
    if isinstance(field, ConstantWeightField):
        return float(field.value)
    if isinstance(e, EdgeId):
        words = e.words()
    else:
        u, v = (VertexId(*p) for p in e)
        if field.canonicalize:
            words = EdgeId.undirected(u, v).words()
        else:
            words = (_VARIANT_TAG[UNDIRECTED], *u.words(), *v.words())
    return float(field._from_words(words)[0])


def edge_weight_matrix(window: LatticeWindow, dist: DistributionSpec, seeds) -> np.ndarray:
    """Weights for many seeds at once; row r equals
    ``WeightField(seeds[r], dist).edge_weights(window)``."""
    keys = [domain_key(int(s), DOMAIN_WEIGHTS) for s in seeds]
    out = np.empty((len(keys), window.n_edges))
    for sel, words in window.edge_word_groups:
        out[:, sel] = inverse_cdf(dist, uniform_words_multi(keys, words))
    return out
