"""Monte Carlo campaigns over seeded replicas.

Replica ``r`` of a campaign uses the weight field keyed by
``derive_seed(config.seed, r)``; everything else is a pure function of the
config, so reports are reproducible byte for byte.  Aggregation always runs
in replica order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import groups
from .errors import (CapViolationError, ConeViolationError, ConfigError, ModelBugError,
                     VariantMismatchError)
from .fpp import (directed_batch, forest_from, inner_boundary_mask,
                  undirected_passage_times)
from .lattice import (DIRECTED, UNDIRECTED, Boundary, DistributionSpec, LatticeWindow,
                      WeightField, edge_weight_matrix)
from .prf import derive_seed

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class EstimatorConfig:
    window: LatticeWindow
    dist: DistributionSpec = field(default_factory=DistributionSpec.exponential)
    seed: int = 0
    replicas: int = 100
    workers: int = 1
    chunk: int = 32

    def __post_init__(self) -> None:
        if self.replicas < 2:
            raise ConfigError("a campaign needs at least 2 replicas")
        if self.workers < 1 or self.chunk < 1:
            raise ConfigError("workers and chunk must be positive")

    def seeds(self) -> list[int]:
        return [derive_seed(self.seed, r) for r in range(self.replicas)]

    def to_json(self) -> dict:
        return {"window": self.window.to_json(), "dist": self.dist.to_json(),
                "seed": self.seed, "replicas": self.replicas}


@dataclass
class Estimate:
    mean: float
    se: float
    n: int
    values: np.ndarray  # the replica ledger, indexed by replica
    notes: list[str] = field(default_factory=list)

    @classmethod
    def from_values(cls, values, notes=None) -> Estimate:
        v = np.asarray(values, dtype=float)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size), v, list(notes or []))

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.se

    def to_json(self) -> dict:
        return {"mean": self.mean, "se": self.se, "n_replicas": self.n, "notes": self.notes}


@dataclass
class SurvivalCurve:
    levels: list[int]
    fraction: np.ndarray
    se: np.ndarray
    alive: np.ndarray  # (replicas, len(levels)) indicators

    def to_json(self) -> dict:
        return {"levels": self.levels, "fraction": self.fraction.tolist(), "se": self.se.tolist()}


@dataclass
class ShapeEstimate:
    t: float
    positions: np.ndarray     # base coordinates of the central columns
    profile: np.ndarray       # k_i / t
    d_hat: float
    max_deviation: float
    band_halfwidth: float     # 2 t^-0.1, recorded only
    in_band: bool
    seed: int

    def to_json(self) -> dict:
        return {"t": self.t, "d_hat": self.d_hat, "max_deviation": self.max_deviation,
                "band_halfwidth": self.band_halfwidth, "in_band": self.in_band,
                "seed": self.seed, "positions": self.positions.tolist(),
                "profile": self.profile.tolist()}


@dataclass
class Report:
    """Campaign summary plus the per-replica rows that back it."""

    estimator: str
    params: dict
    mean: float | None
    se: float | None
    n_replicas: int
    verdict: str
    threshold_provenance: str
    details: dict = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)  # (replica, statistic, value)

    def to_json(self) -> dict:
        return {"estimator": self.estimator, "params": self.params, "mean": self.mean,
                "se": self.se, "n_replicas": self.n_replicas, "verdict": self.verdict,
                "threshold_provenance": self.threshold_provenance, "details": self.details}

    def json_text(self) -> str:
        return json.dumps(_plain(self.to_json()), sort_keys=True, indent=2) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica", "statistic", "value"])
        for r, stat, val in self.rows:
            w.writerow([r, stat, _fmt(val)])
        return buf.getvalue()

    def write(self, out_dir, stem: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.estimator
        pj, pc = out / f"{stem}.json", out / f"{stem}.csv"
        pj.write_text(self.json_text())
        pc.write_text(self.csv_text())
        return pj, pc


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


# ---------------------------------------------------------------------------
# frozen thresholds


def thresholds() -> dict:
    """Pilot-calibrated thresholds shipped with the package."""
    text = resources.files("edenfpp").joinpath("data/thresholds.json").read_text()
    return json.loads(text)


def threshold(name: str) -> tuple[float, str]:
    entry = thresholds()[name]
    return float(entry["value"]), str(entry["provenance"])


# ---------------------------------------------------------------------------
# replica plumbing


def _chunks(config: EstimatorConfig) -> list[list[int]]:
    idx = list(range(config.replicas))
    return [idx[i:i + config.chunk] for i in range(0, len(idx), config.chunk)]


def map_chunks(fn, config: EstimatorConfig, *args) -> list:
    """Run ``fn(config, replica_indices, *args)`` over replica chunks and
    concatenate results in replica order."""
    chunks = _chunks(config)
    if config.workers == 1 or len(chunks) == 1:
        parts = [fn(config, c, *args) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            parts = list(ex.map(fn, [config] * len(chunks), chunks,
                                *[[a] * len(chunks) for a in args]))
    return [item for part in parts for item in part]


def _base_index(window: LatticeWindow, x) -> int:
    if x is None:
        x = window.base.identity
    x = groups.validate(window.base, x)
    try:
        return window.base_index[x]
    except KeyError:
        raise ConfigError(f"{x} is not a base vertex of the window") from None


def _directed_roots(config: EstimatorConfig, reps: list[int], height: int):
    W = config.window.with_height(height) if config.window.height != height else config.window
    seeds = [derive_seed(config.seed, r) for r in reps]
    return directed_batch(W, edge_weight_matrix(W, config.dist, seeds))


def _level_counts_directed(config, reps, height, b):
    """Per replica: (level sizes of T(x_b), partition sums per level)."""
    _, root = _directed_roots(config, reps, height)
    sizes = (root == b).sum(axis=2)
    total = (root >= 0).sum(axis=2)
    return list(zip(sizes, total))


def _level_counts_undirected(config, reps, height, b):
    W = config.window.with_height(height) if config.window.height != height else config.window
    out = []
    for r in reps:
        f = forest_from(undirected_passage_times(W, WeightField(derive_seed(config.seed, r),
                                                                config.dist)))
        root = f.root.reshape(W.height + 1, W.B)
        out.append(((root == b).sum(axis=1), (root >= 0).sum(axis=1)))
    return out


def _level_counts(config: EstimatorConfig, height: int, b: int):
    fn = _level_counts_directed if config.window.variant == DIRECTED else _level_counts_undirected
    rows = map_chunks(fn, config, height, b)
    sizes = np.array([s for s, _ in rows])
    totals = np.array([t for _, t in rows])
    return sizes, totals


def _bias_notes(window: LatticeWindow) -> list[str]:
    if window.boundary.mode != "periodic":
        msg = ("free-strip window: translation invariance is broken near the strip edge, "
               "so the estimate is biased")
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        return [msg]
    return []


# ---------------------------------------------------------------------------
# level identities


def estimate_level_means(config: EstimatorConfig, x, ns) -> tuple[dict[int, Estimate], dict]:
    """E[w_n(T(x))] for each n, from a single forest per replica, plus the
    per-replica partition audit (sum over x of w_n equals the number of
    reachable level-n vertices)."""
    ns = sorted(set(int(n) for n in ns))
    W = config.window
    if ns[-1] > W.height or ns[0] < 0:
        raise CapViolationError(f"levels {ns} exceed the window height {W.height}")
    notes = _bias_notes(W)
    b = _base_index(W, x)
    sizes, totals = _level_counts(config, W.height, b)
    audit_ok = np.ones(config.replicas, dtype=bool)
    expected = W.B if W.boundary.mode == "periodic" else None
    out = {}
    for n in ns:
        # the forest partitions the reachable part of level n
        part = sizes[:, n]
        ok = totals[:, n] == (expected if expected is not None else totals[:, n])
        audit_ok &= ok
        out[n] = Estimate.from_values(part, notes)
    audit = {"replicas": config.replicas, "exact": int(audit_ok.sum()),
             "fraction": float(audit_ok.mean()),
             "partition_sum": expected, "levels": ns}
    return out, audit


def estimate_level_mean(config: EstimatorConfig, x, n: int) -> Estimate:
    est, audit = estimate_level_means(config, x, [n])
    e = est[n]
    e.notes.append(f"partition audit exact in {audit['exact']}/{audit['replicas']} replicas")
    return e


def estimate_level_bounds(config: EstimatorConfig, x, n: int, ms) -> dict[int, Estimate]:
    """E|T_{Lambda_n}(x) cap G_m| for each m, using the forest of the
    height-n window."""
    ms = sorted(set(int(m) for m in ms))
    if not 0 <= ms[0] <= ms[-1] <= n:
        raise ConfigError("need 0 <= m <= n")
    if n > config.window.height:
        raise CapViolationError(f"n={n} exceeds the window height {config.window.height}")
    notes = _bias_notes(config.window)
    b = _base_index(config.window, x)
    sizes, _ = _level_counts(config, n, b)
    return {m: Estimate.from_values(sizes[:, m], notes) for m in ms}


def estimate_level_bound(config: EstimatorConfig, x, n: int, m: int) -> Estimate:
    return estimate_level_bounds(config, x, n, [m])[m]


# ---------------------------------------------------------------------------
# survival


def _alive_undirected(config, reps, levels, b):
    base = config.window
    out = []
    for r in reps:
        field_ = WeightField(derive_seed(config.seed, r), config.dist)
        row = []
        for n in levels:
            W = base.with_height(n)
            f = forest_from(undirected_passage_times(W, field_))
            row.append(bool((f.root[n * W.B:(n + 1) * W.B] == b).any()))
        out.append(row)
    return out


def _alive_directed(config, reps, levels, b):
    _, root = _directed_roots(config, reps, max(levels))
    alive = (root == b).any(axis=2)
    # monotonicity over every level, not only the requested ones
    bad = np.flatnonzero((alive[:, 1:] & ~alive[:, :-1]).any(axis=1))
    if bad.size:
        raise ModelBugError(f"survival indicator increased in replica {reps[bad[0]]}")
    return alive[:, levels].tolist()


def survival_curve(config: EstimatorConfig, x, levels) -> SurvivalCurve:
    """Fraction of replicas with T^n(x) non-empty, per level."""
    levels = sorted(set(int(n) for n in levels))
    W = config.window
    if levels[-1] > W.height:
        raise CapViolationError(f"level {levels[-1]} exceeds the window height {W.height}")
    b = _base_index(W, x)
    fn = _alive_directed if W.variant == DIRECTED else _alive_undirected
    alive = np.array(map_chunks(fn, config, levels, b), dtype=bool)
    bad = np.flatnonzero((alive[:, 1:] & ~alive[:, :-1]).any(axis=1))
    if bad.size:
        raise ModelBugError(f"survival indicator increased in replica {int(bad[0])}")
    frac = alive.mean(axis=0)
    se = alive.std(axis=0, ddof=1) / math.sqrt(alive.shape[0])
    return SurvivalCurve(levels, frac, se, alive)


def level_monotonicity(config: EstimatorConfig, max_level: int) -> dict:
    """Count replicas and roots where T^n(x) is non-empty but T^m(x) is
    empty for some m < n <= max_level (all base vertices x)."""
    W = config.window
    levels = list(range(max_level + 1))
    fn = _nonempty_directed if W.variant == DIRECTED else _nonempty_undirected
    rows = map_chunks(fn, config, levels)
    violations = 0
    for ne in rows:  # (levels, B)
        ne = np.asarray(ne, dtype=bool)
        seen_dead = np.logical_or.accumulate(~ne, axis=0)
        violations += int((ne[1:] & seen_dead[:-1]).sum())
    return {"replicas": len(rows), "levels": max_level, "violations": violations}


def _nonempty_directed(config, reps, levels):
    _, root = _directed_roots(config, reps, max(levels))
    B = root.shape[2]
    return [np.stack([np.bincount(root[i, n][root[i, n] >= 0], minlength=B) > 0
                      for n in levels]) for i in range(len(reps))]


def _nonempty_undirected(config, reps, levels):
    base = config.window
    windows = {n: base.with_height(n) for n in levels}
    out = []
    for r in reps:
        field_ = WeightField(derive_seed(config.seed, r), config.dist)
        rows = []
        for n in levels:
            W = windows[n]
            f = forest_from(undirected_passage_times(W, field_))
            top = f.root[n * W.B:(n + 1) * W.B]
            rows.append(np.bincount(top[top >= 0], minlength=W.B) > 0)
        out.append(np.stack(rows))
    return out


# ---------------------------------------------------------------------------
# tails


def _tail_rows(config, reps, cap, b):
    _, root = _directed_roots(config, reps, cap)
    sizes = (root == b).sum(axis=2)  # (reps, cap + 1)
    return list(sizes)


TAIL_STATISTICS = ("max-width", "height-moment")


def tail_divergence(config: EstimatorConfig, statistic: str, caps, x=None) -> Report:
    """Capped means of w(T(x)) ("max-width") or phi_G(h(T(x))) ("height-moment")
    for increasing height caps, from one forest per replica."""
    return tail_reports(config, [statistic], caps, x)[statistic]


def tail_reports(config: EstimatorConfig, statistics, caps, x=None) -> dict[str, Report]:
    """Several tail statistics from the same replica forests."""
    for statistic in statistics:
        if statistic not in TAIL_STATISTICS:
            raise ConfigError(f"unknown tail statistic {statistic!r}")
    caps = [int(c) for c in caps]
    if caps != sorted(set(caps)) or not caps:
        raise ConfigError("height caps must be strictly increasing")
    W = config.window
    if W.variant != DIRECTED:
        raise VariantMismatchError("tail campaigns use the directed window")
    H = caps[-1]
    if W.height < H:
        raise CapViolationError(f"cap {H} exceeds the window height {W.height}")
    _require_cone(W, H)
    b = _base_index(W, x)
    sizes = np.array(map_chunks(_tail_rows, config, H, b))
    return {stat: _tail_report(config, stat, caps, sizes) for stat in statistics}


def _tail_report(config: EstimatorConfig, statistic: str, caps: list[int],
                 sizes: np.ndarray) -> Report:
    W = config.window
    rows, per_cap = [], []
    for cap in caps:
        s = sizes[:, :cap + 1]
        if statistic == "max-width":
            vals = s.max(axis=1)
        else:
            h = np.array([np.flatnonzero(row).max() for row in s])
            vals = np.array([groups.ball_size(W.base, int(k)) for k in h])
        est = Estimate.from_values(vals)
        per_cap.append({"cap": cap, "mean": est.mean, "se": est.se})
        rows += [(r, f"{statistic}@{cap}", v) for r, v in enumerate(vals.tolist())]
    means = [c["mean"] for c in per_cap]
    increasing = all(a < b_ for a, b_ in zip(means, means[1:]))
    separated = all(p["mean"] + p["se"] < q["mean"] - q["se"]
                    for p, q in zip(per_cap, per_cap[1:]))
    verdict = PASS if increasing and separated else (INCONCLUSIVE if increasing else FAIL)
    return Report("tail-divergence", {"statistic": statistic, "caps": caps, **config.to_json()},
                  means[-1], per_cap[-1]["se"], config.replicas, verdict,
                  "strict growth with non-overlapping 1-SE bands (no numeric threshold)",
                  {"per_cap": per_cap}, rows)


def _require_cone(W: LatticeWindow, n: int) -> None:
    """Level-n statistics near x need base vertices within 2n (trees) of x."""
    if W.boundary.mode == "strip":
        if W.boundary.radius < 2 * n:
            raise ConeViolationError(
                f"strip radius {W.boundary.radius} < {2 * n}: the dependence cone of level {n} "
                "leaves the window")
    elif W.base.kind == "cycle" and W.base.sides[0] <= 2 * n:
        raise ConeViolationError(
            f"circumference {W.base.sides[0]} must exceed {2 * n} for level {n}")


# ---------------------------------------------------------------------------
# vertical speed


def _vertical_rows(config, reps, ns, b):
    dist, _ = _directed_roots(config, reps, max(ns))
    return list(dist[:, ns, b])


def vertical_constant(config: EstimatorConfig, ns, kappa0: float = 0.05, x=None) -> Report:
    """W_n / n where W_n is the passage time of (x, n) in the directed graph."""
    ns = sorted(set(int(n) for n in ns))
    W = config.window
    if W.variant != DIRECTED:
        raise VariantMismatchError("the vertical constant is a directed-graph statistic")
    if W.height < ns[-1]:
        raise CapViolationError(f"level {ns[-1]} exceeds the window height {W.height}")
    if W.boundary.mode != "periodic" or (W.base.kind == "cycle" and W.base.sides[0] <= 2 * ns[-1]):
        raise ConeViolationError("need a periodic window with circumference > 2 * max n")
    b = _base_index(W, x)
    Wn = np.array(map_chunks(_vertical_rows, config, ns, b))
    limit, prov = threshold("vertical_ratio_max")
    per_n, rows = [], []
    for j, n in enumerate(ns):
        ratio = Wn[:, j] / n
        est = Estimate.from_values(ratio)
        per_n.append({"n": n, "mean_ratio": est.mean, "se": est.se,
                      "fraction_below": float((Wn[:, j] < (1 - kappa0) * n).mean())})
        rows += [(r, f"W_n/n@{n}", v) for r, v in enumerate(ratio.tolist())]
    subadd = all(q["mean_ratio"] <= p["mean_ratio"] + 3 * math.hypot(p["se"], q["se"])
                 for p, q in zip(per_n, per_n[1:]))
    last = per_n[-1]
    verdict = PASS if last["mean_ratio"] <= limit else FAIL
    # estimated kappa: how far the mean sits below the per-edge mean
    kappa_hat = 1.0 - last["mean_ratio"] / config.dist.mean
    return Report("vertical", {"levels": ns, "kappa0": kappa0, **config.to_json()},
                  last["mean_ratio"], last["se"], config.replicas, verdict,
                  f"mean W_n/n <= {limit} ({prov})",
                  {"per_n": per_n, "subadditive_trend": subadd, "kappa_hat": kappa_hat,
                   "threshold": limit}, rows)


# ---------------------------------------------------------------------------
# flat boundary


def shape_profile_single(window: LatticeWindow, field_, ts, central_fraction: float = 0.5
                         ) -> list[ShapeEstimate]:
    """Boundary heights of the growth set at each time in ``ts`` for one
    weight field.  The base must be Z (or a cycle) so columns are lines."""
    if window.variant != UNDIRECTED:
        raise VariantMismatchError("the shape experiment is defined for the undirected graph")
    if window.base.rank != 1 or window.base.kind == "free-group":
        raise ConfigError("shape profiles need a one-dimensional abelian base")
    ptm = undirected_passage_times(window, field_)
    H, B = window.height, window.B
    dist = ptm.dist.reshape(H + 1, B)
    coords = np.array([e[0] for e in window.base_elements])
    c0 = window.center[0]
    if window.boundary.mode == "strip":
        half = window.boundary.radius
    else:
        half = B // 2
    central = np.abs(coords - c0) <= central_fraction * half
    out = []
    for t in ts:
        mask = dist < t
        if mask[H].any():
            raise CapViolationError(f"growth at t={t} reaches the window cap H={H}")
        bd = inner_boundary_mask(mask.ravel(), window).reshape(H + 1, B)
        lv = np.where(bd, np.arange(H + 1)[:, None], -1).max(axis=0)
        k = lv[central].astype(float)
        prof = k / t
        d_hat = float(prof.mean())
        dev = float(np.abs(prof - d_hat).max())
        band = 2.0 * t ** -0.1
        out.append(ShapeEstimate(float(t), coords[central], prof, d_hat, dev, band,
                                 bool(dev <= band), int(field_.seed)))
    return out


def _shape_rows(config, reps, ts, central_fraction):
    return [shape_profile_single(config.window,
                                 WeightField(derive_seed(config.seed, r), config.dist),
                                 ts, central_fraction) for r in reps]


def shape_profile(config: EstimatorConfig, ts, central_fraction: float = 0.5) -> Report:
    """Median (over replicas) max deviation of the central boundary profile
    per t, and the spread of the estimated growth speed."""
    ts = [float(t) for t in ts]
    if any(t <= 0 for t in ts):
        raise ConfigError("times must be positive")
    per_rep = map_chunks(_shape_rows, config, ts, central_fraction)
    rows, per_t = [], []
    for j, t in enumerate(ts):
        devs = np.array([rep[j].max_deviation for rep in per_rep])
        dh = np.array([rep[j].d_hat for rep in per_rep])
        per_t.append({"t": t, "median_max_deviation": float(np.median(devs)),
                      "median_d_hat": float(np.median(dh)), "mean_d_hat": float(dh.mean()),
                      "band_halfwidth": 2.0 * t ** -0.1,
                      "in_band_fraction": float(np.mean([rep[j].in_band for rep in per_rep]))})
        rows += [(r, f"max_deviation@{t:g}", v) for r, v in enumerate(devs.tolist())]
        rows += [(r, f"d_hat@{t:g}", v) for r, v in enumerate(dh.tolist())]
    details = {"per_t": per_t, "central_fraction": central_fraction}
    if len(ts) < 2:
        verdict, prov = INCONCLUSIVE, "single time: profile only, no trend verdict"
    else:
        md = [p["median_max_deviation"] for p in per_t]
        trend = all(b_ <= a for a, b_ in zip(md, md[1:]))
        tol, prov = threshold("shape_dhat_rel_tol")
        d1, d2 = per_t[-2]["median_d_hat"], per_t[-1]["median_d_hat"]
        rel = abs(d1 - d2) / d2
        details.update({"deviation_non_increasing": trend, "d_hat_rel_change": rel,
                        "d_hat_tolerance": tol})
        verdict = PASS if trend and rel <= tol else FAIL
        prov = f"median deviation non-increasing; last two d_hat within {tol:.0%} ({prov})"
    return Report("shape", {"times": ts, **config.to_json()}, per_t[-1]["median_d_hat"], None,
                  config.replicas, verdict, prov, details, rows)


def shape_window(t_max: float, speed: float = 2.5, central_half: int | None = None,
                 margin: float = 1.2) -> LatticeWindow:
    """A Z-strip tall enough for growth up to ``t_max`` at roughly ``speed``
    levels per unit time."""
    H = int(math.ceil(margin * speed * t_max))
    R = central_half * 2 if central_half else int(t_max * 2)
    return LatticeWindow(groups.GroupSpec.integer_lattice(1), UNDIRECTED, H, Boundary.strip(R))


# ---------------------------------------------------------------------------
# mass transport


def _transport_rows(config, reps, n, kind):
    W = config.window
    out = []
    if W.variant == DIRECTED:
        _, root = _directed_roots(config, reps, n)
        tops = list(root[:, n])
    else:
        Wn = W.with_height(n)
        tops = []
        for r in reps:
            f = forest_from(undirected_passage_times(Wn, WeightField(derive_seed(config.seed, r),
                                                                     config.dist)))
            tops.append(f.root[n * Wn.B:(n + 1) * Wn.B])
    for top in tops:
        B = top.size
        M = np.zeros((B, B), dtype=np.int64)  # M[x, y]: mass from y to x
        if kind == "unit":
            ok = top >= 0
            M[top[ok], np.flatnonzero(ok)] = 1
        sent = M.sum(axis=0)
        recv = M.sum(axis=1)
        out.append((int(sent.sum()), int(recv.sum()), int(sent[0]), int(recv[0])))
    return out


def mass_transport_audit(config: EstimatorConfig, n: int, kind: str = "unit") -> Report:
    """Exact per-replica check that total mass sent equals total mass received
    for the transport "y sends 1 to x when (y, n) lies in T^n(x)"."""
    W = config.window
    if W.boundary.mode != "periodic":
        raise ConfigError("the mass transport audit needs a periodic window")
    if kind not in ("unit", "zero"):
        raise ConfigError(f"unknown transport {kind!r}")
    if n > W.height:
        raise CapViolationError(f"level {n} exceeds the window height {W.height}")
    res = map_chunks(_transport_rows, config, n, kind)
    for r, (s, rcv, _, _) in enumerate(res):
        if s != rcv:
            raise ModelBugError(f"mass transport imbalance in replica {r}: {s} != {rcv}")
    sent0 = Estimate.from_values([x[2] for x in res])
    recv0 = Estimate.from_values([x[3] for x in res])
    rows = [(r, "total", s) for r, (s, _, _, _) in enumerate(res)]
    rows += [(r, "received_by_origin", x[3]) for r, x in enumerate(res)]
    return Report("mass-transport", {"n": n, "transport": kind, **config.to_json()},
                  recv0.mean, recv0.se, config.replicas, PASS,
                  "exact per-replica equality", {
                      "total_mass": sorted({x[0] for x in res}),
                      "expected_sent_by_origin": sent0.mean,
                      "expected_received_by_origin": recv0.mean,
                      "received_se": recv0.se}, rows)


# ---------------------------------------------------------------------------
# reports for the identity campaigns


def level_mean_report(config: EstimatorConfig, ns, x=None) -> Report:
    est, audit = estimate_level_means(config, x, ns)
    per = [{"n": n, **e.to_json(), "within_3se_of_1": e.within(1.0)} for n, e in est.items()]
    ok = all(p["within_3se_of_1"] for p in per) and audit["fraction"] == 1.0
    rows = [(r, f"w_n@{n}", v) for n, e in est.items() for r, v in enumerate(e.values.tolist())]
    last = est[max(est)]
    return Report("level-mean", {"levels": sorted(est), **config.to_json()}, last.mean, last.se,
                  config.replicas, PASS if ok else FAIL,
                  "exact target 1 within 3 SE; exact partition audit",
                  {"per_level": per, "partition_audit": audit}, rows)


def level_bound_report(config: EstimatorConfig, n: int, ms, x=None) -> Report:
    est = estimate_level_bounds(config, x, n, ms)
    per = [{"m": m, **e.to_json(), "bound_ok": e.mean <= 1 + 3 * e.se} for m, e in est.items()]
    ok = all(p["bound_ok"] for p in per)
    rows = [(r, f"size@{m}", v) for m, e in est.items() for r, v in enumerate(e.values.tolist())]
    last = est[max(est)]
    return Report("level-bound", {"n": n, "levels": sorted(est), **config.to_json()}, last.mean,
                  last.se, config.replicas, PASS if ok else FAIL, "upper bound 1 + 3 SE",
                  {"per_level": per}, rows)


def survival_report(config: EstimatorConfig, levels, x=None) -> Report:
    curve = survival_curve(config, x, levels)
    factor, prov = threshold("survival_factor")
    lo, hi = curve.fraction[0], curve.fraction[-1]
    ok = hi * factor <= lo if len(levels) > 1 else True
    rows = [(r, f"alive@{n}", int(v)) for j, n in enumerate(curve.levels)
            for r, v in enumerate(curve.alive[:, j].tolist())]
    return Report("survival", {"levels": curve.levels, **config.to_json()}, float(hi),
                  float(curve.se[-1]), config.replicas, PASS if ok else FAIL,
                  f"survival(first) >= {factor} x survival(last) ({prov})",
                  {**curve.to_json(), "factor": factor, "monotone_replicas": config.replicas},
                  rows)
