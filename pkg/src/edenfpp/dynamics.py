"""Stationary Eden chain and its coupling with exponential first passage.

The chain starts with the whole base layer occupied (every base vertex its
own root) and repeatedly occupies the far end of a uniformly chosen boundary
edge.  With exponential weights the first-passage forest visits vertices in
the same law, which ``memorylessness_test`` checks step by step.
"""

from __future__ import annotations

import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sps

from .errors import CouplingInvalidError, ModelBugError, SaturatedError
from .fpp import PassageTimeMap
from .lattice import (DIRECTED, DistributionSpec, EdgeId, LatticeWindow, VertexId,
                      edge_weight_matrix)
from .prf import DOMAIN_CHAIN, derive_seed

log = logging.getLogger(__name__)

MIN_CLASS_SIZE = 50
MIN_EXPECTED = 5.0


def chain_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Chain randomness lives in its own key domain, apart from the weights."""
    ss = np.random.SeedSequence([DOMAIN_CHAIN, seed & (2**64 - 1), replica])
    return np.random.Generator(np.random.Philox(ss))


def _feed_lists(window: LatticeWindow):
    """feeds[u] = [(v, e)]: vertex v can be occupied from u through edge e."""
    cache = window.__dict__.setdefault("_eden_cache", {})
    if "feeds" not in cache:
        feeds: list[list[tuple[int, int]]] = [[] for _ in range(window.n_vertices)]
        fed_by: list[list[int]] = [[] for _ in range(window.n_vertices)]
        for e, (a, b) in enumerate(zip(window.edge_a.tolist(), window.edge_b.tolist())):
            if window.variant == DIRECTED:
                feeds[b].append((a, e))     # lower b feeds upper a
                fed_by[a].append(b)
            else:
                feeds[a].append((b, e))
                feeds[b].append((a, e))
                fed_by[a].append(b)
                fed_by[b].append(a)
        cache["feeds"] = (feeds, fed_by)
    return cache["feeds"]


@dataclass
class AdditionRecord:
    edge: EdgeId | None
    vertex: VertexId
    root: VertexId
    step: int
    time: float | None = None


@dataclass
class AdditionSequence:
    records: list[AdditionRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def non_base(self) -> list[AdditionRecord]:
        return [r for r in self.records if r.edge is not None]


class EdenState:
    """Occupied set, root labels and the boundary edge list of the chain."""

    def __init__(self, window: LatticeWindow):
        self.window = window
        self.feeds, self.fed_by = _feed_lists(window)
        B = window.B
        self.occupied = np.zeros(window.n_vertices, dtype=bool)
        self.occupied[:B] = True
        self.root = np.full(window.n_vertices, -1, dtype=np.int64)
        self.root[:B] = np.arange(B)
        self.step_count = 0
        self._arcs: list[tuple[int, int, int]] = []
        self._pos: dict[tuple[int, int], int] = {}
        for u in range(B):
            for v, e in self.feeds[u]:
                self._add_arc(u, v, e)

    def _add_arc(self, u: int, v: int, e: int) -> None:
        self._pos[(u, v)] = len(self._arcs)
        self._arcs.append((u, v, e))

    def _drop_arc(self, u: int, v: int) -> None:
        i = self._pos.pop((u, v))
        last = self._arcs.pop()
        if i < len(self._arcs):
            self._arcs[i] = last
            self._pos[(last[0], last[1])] = i

    @property
    def boundary(self) -> list[tuple[int, int, int]]:
        """(occupied u, unoccupied v, edge) triples in internal order."""
        return list(self._arcs)

    def boundary_edges(self) -> set[int]:
        return {e for _, _, e in self._arcs}

    def recompute_boundary(self) -> set[tuple[int, int, int]]:
        occ = self.occupied
        return {(u, v, e) for u in np.flatnonzero(occ).tolist()
                for v, e in self.feeds[u] if not occ[v]}

    def occupy(self, u: int, v: int, e: int) -> AdditionRecord:
        if self.occupied[v] or not self.occupied[u]:
            raise ModelBugError(f"illegal addition {u}->{v}")
        self.occupied[v] = True
        self.root[v] = self.root[u]
        for w in self.fed_by[v]:
            if self.occupied[w]:
                self._drop_arc(w, v)
        for w, e2 in self.feeds[v]:
            if not self.occupied[w]:
                self._add_arc(v, w, e2)
        self.step_count += 1
        W = self.window
        return AdditionRecord(W.edge(e), W.vertex(v), W.vertex(int(self.root[v])),
                              self.step_count)

    def step(self, rng: np.random.Generator) -> AdditionRecord:
        if not self._arcs:
            raise SaturatedError("no boundary edge left inside the window")
        u, v, e = self._arcs[int(rng.integers(len(self._arcs)))]
        return self.occupy(u, v, e)


def eden_step(state: EdenState, rng: np.random.Generator) -> tuple[EdenState, AdditionRecord]:
    """Advance the chain by one addition (the state is updated in place)."""
    rec = state.step(rng)
    return state, rec


def run_chain(window: LatticeWindow, steps: int, seed: int, replica: int = 0) -> list[AdditionRecord]:
    state = EdenState(window)
    rng = chain_rng(seed, replica)
    return [state.step(rng) for _ in range(steps)]


# ---------------------------------------------------------------------------
# coupling with first passage


def _require_exponential(dist) -> None:
    if dist is None or getattr(dist, "kind", None) != "exponential":
        raise CouplingInvalidError(
            "the Eden/first-passage coupling needs exponential edge weights")


def coupling_order(ptm: PassageTimeMap) -> AdditionSequence:
    """Vertices in increasing passage time, base layer first."""
    _require_exponential(getattr(ptm.field, "dist", None))
    W = ptm.window
    finite = np.flatnonzero(np.isfinite(ptm.dist))
    order = finite[np.lexsort((finite, ptm.dist[finite]))]
    d = ptm.dist[order]
    upper = d[W.B:]
    ties = np.flatnonzero(np.diff(upper) <= 0)
    if ties.size:
        i = W.B + int(ties[0])
        raise ModelBugError(
            f"passage-time tie at {W.vertex(order[i])} / {W.vertex(order[i + 1])}: d={d[i]!r}")
    root = ptm.forest.root
    recs = []
    for step, v in enumerate(order.tolist()):
        e = int(ptm.pred_edge[v])
        recs.append(AdditionRecord(None if e < 0 else W.edge(e), W.vertex(v),
                                   VertexId(W.base_elements[root[v]], 0), step,
                                   float(ptm.dist[v])))
    return AdditionSequence(recs)


def _pull_arcs(window: LatticeWindow):
    """Arrays (src, dst, edge) of every way ``dst`` can be reached from ``src``."""
    a, b = window.edge_a, window.edge_b
    e = np.arange(window.n_edges)
    if window.variant == DIRECTED:
        return b, a, e
    return np.concatenate([a, b]), np.concatenate([b, a]), np.concatenate([e, e])


def first_additions(window: LatticeWindow, dist: DistributionSpec, seeds, k: int) -> np.ndarray:
    """First ``k`` non-base additions of the first-passage order for many
    seeds at once: returns (len(seeds), k, 2) array of (vertex, edge)."""
    W = edge_weight_matrix(window, dist, seeds)
    src, dst, arc_e = _pull_arcs(window)
    N = W.shape[0]
    d = np.full((N, window.n_vertices), np.inf)
    d[:, :window.B] = 0.0
    occ = np.zeros((N, window.n_vertices), dtype=bool)
    occ[:, :window.B] = True
    rows = np.arange(N)
    w_arc = W[:, arc_e]
    out = np.empty((N, k, 2), dtype=np.int64)
    for s in range(k):
        live = occ[:, src] & ~occ[:, dst]
        cand = np.where(live, d[:, src] + w_arc, np.inf)
        j = np.argmin(cand, axis=1)
        if not np.isfinite(cand[rows, j]).all():
            raise SaturatedError("window saturated before the requested step")
        v = dst[j]
        d[rows, v] = cand[rows, j]
        occ[rows, v] = True
        out[:, s, 0] = v
        out[:, s, 1] = arc_e[j]
    return out


# ---------------------------------------------------------------------------
# statistical checks


def boundary_of(window: LatticeWindow, occupied: frozenset[int]) -> list[int]:
    """Boundary edges (sorted) of base layer + ``occupied`` non-base vertices."""
    feeds, _ = _feed_lists(window)
    occ = set(range(window.B)) | set(occupied)
    return sorted({e for u in occ for v, e in feeds[u] if v not in occ})


def chi_square_uniform(counts: np.ndarray) -> tuple[float, int, float]:
    """Goodness of fit against uniform; bins with expected count < 5 are
    merged into one rest bin."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    expected = np.full(counts.size, n / counts.size)
    return chi_square(counts, expected)


def chi_square(counts, expected) -> tuple[float, int, float]:
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    small = expected < MIN_EXPECTED
    if small.any():
        counts = np.append(counts[~small], counts[small].sum())
        expected = np.append(expected[~small], expected[small].sum())
        if expected[-1] == 0:
            counts, expected = counts[:-1], expected[:-1]
    dof = counts.size - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(((counts - expected) ** 2 / expected).sum())
    return stat, dof, float(sps.chi2.sf(stat, dof))


def memorylessness_test(window: LatticeWindow, steps: int, replicas: int, seed: int,
                        dist: DistributionSpec | None = None) -> dict:
    """Per step, conditional on the occupied set, compare the next added
    edge of the first-passage order with the uniform law on the boundary."""
    dist = dist or DistributionSpec.exponential()
    seeds = [derive_seed(seed, r) for r in range(replicas)]
    adds = first_additions(window, dist, seeds, steps)
    report_steps = []
    for s in range(steps):
        classes: dict[frozenset[int], Counter] = {}
        for r in range(replicas):
            key = frozenset(adds[r, :s, 0].tolist())
            classes.setdefault(key, Counter())[int(adds[r, s, 1])] += 1
        total_stat, total_dof, rows, skipped = 0.0, 0, [], 0
        for key in sorted(classes, key=lambda c: sorted(c)):
            cnt = classes[key]
            n = sum(cnt.values())
            bd = boundary_of(window, key)
            stray = set(cnt) - set(bd)
            if stray:
                raise ModelBugError(f"additions {sorted(stray)} are not boundary edges")
            if n < MIN_CLASS_SIZE:
                skipped += 1
                warnings.warn(f"step {s + 1}: class of size {n} < {MIN_CLASS_SIZE} skipped "
                              "(underpowered)", RuntimeWarning, stacklevel=2)
                continue
            counts = np.array([cnt.get(e, 0) for e in bd])
            stat, dof, p = chi_square_uniform(counts)
            total_stat += stat
            total_dof += dof
            rows.append({"occupied": [_vkey(window, v) for v in sorted(key)],
                         "n": n, "boundary": [_ekey(window, e) for e in bd],
                         "counts": counts.tolist(), "expected": n / len(bd),
                         "chi2": stat, "dof": dof, "p_value": p})
        p_step = float(sps.chi2.sf(total_stat, total_dof)) if total_dof else 1.0
        report_steps.append({"step": s + 1, "chi2": total_stat, "dof": total_dof,
                             "p_value": p_step, "classes": rows, "skipped_classes": skipped})
    return {"test": "memorylessness", "window": window.to_json(), "dist": dist.to_json(),
            "seed": seed, "replicas": replicas, "steps": report_steps}


def _vkey(window: LatticeWindow, idx: int) -> str:
    from .groups import element_key
    v = window.vertex(idx)
    return f"{element_key(window.base, v.element)}@{v.level}"


def _ekey(window: LatticeWindow, e: int) -> str:
    return f"{_vkey(window, int(window.edge_a[e]))}~{_vkey(window, int(window.edge_b[e]))}"


def exact_chain_distribution(window: LatticeWindow, k: int) -> dict[tuple[int, ...], Fraction]:
    """Law of the first ``k`` added edges of the chain, by exhaustive
    enumeration of boundary choices."""
    feeds, _ = _feed_lists(window)
    out: dict[tuple[int, ...], Fraction] = {}

    def rec(occ: frozenset[int], seq: tuple[int, ...], p: Fraction) -> None:
        if len(seq) == k:
            out[seq] = out.get(seq, Fraction(0)) + p
            return
        full = set(range(window.B)) | occ
        arcs = [(v, e) for u in sorted(full) for v, e in feeds[u] if v not in full]
        if not arcs:
            raise SaturatedError("window saturated during enumeration")
        q = p / len(arcs)
        for v, e in arcs:
            rec(occ | {v}, seq + (e,), q)

    rec(frozenset(), (), Fraction(1))
    return out


def chain_distribution(window: LatticeWindow, k: int, runs: int, seed: int) -> Counter:
    """Empirical law of the first ``k`` added edges over independent chains."""
    out: Counter = Counter()
    for r in range(runs):
        state = EdenState(window)
        rng = chain_rng(seed, r)
        seq = []
        for _ in range(k):
            u, v, e = state._arcs[int(rng.integers(len(state._arcs)))]
            state.occupy(u, v, e)
            seq.append(e)
        out[tuple(seq)] += 1
    return out


def coupling_distribution(window: LatticeWindow, dist: DistributionSpec, k: int,
                          replicas: int, seed: int) -> Counter:
    _require_exponential(dist)
    seeds = [derive_seed(seed, r) for r in range(replicas)]
    adds = first_additions(window, dist, seeds, k)
    return Counter(tuple(row) for row in adds[:, :, 1].tolist())


def compare_to_exact(empirical: Counter, exact: dict, n: int, z: float = 3.0) -> dict:
    """Per-outcome z-scores and a pooled chi-square against the exact law."""
    outcomes = sorted(exact)
    probs = np.array([float(exact[o]) for o in outcomes])
    counts = np.array([empirical.get(o, 0) for o in outcomes], dtype=float)
    extra = sum(c for o, c in empirical.items() if o not in exact)
    freq = counts / n
    se = np.sqrt(probs * (1 - probs) / n)
    zs = np.where(se > 0, (freq - probs) / np.where(se > 0, se, 1), 0.0)
    stat, dof, p = chi_square(counts, probs * n)
    return {"outcomes": len(outcomes), "max_abs_z": float(np.abs(zs).max()),
            "within_z": bool(np.all(np.abs(zs) <= z)) and extra == 0,
            "impossible_outcomes": int(extra), "chi2": stat, "dof": dof, "p_value": p}
