"""Command-line driver: ``edenfpp {simulate,stats,shape,eden,render,oracle}``.

Each command reads a JSON config (validated against a versioned schema,
unknown keys rejected), applies flag overrides, and writes deterministic
outputs under ``--out``.  Exit codes: 0 pass, 1 statistical fail,
2 usage or config error, 3 resource or cap error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

import jsonschema

from . import __version__, dynamics, fpp, render, stats
from .errors import (BudgetExceededError, CapViolationError, ConfigError,
                     CouplingInvalidError, UnsupportedLayoutError, VariantMismatchError)
from .lattice import DistributionSpec, LatticeWindow, WeightField

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
SCHEMA_VERSION = 1
COMMANDS = ("simulate", "stats", "shape", "eden", "render", "oracle")
SUITES = ("level-mean", "level-bound", "survival", "tails", "vertical", "mass-transport")

_GROUP = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["integer-lattice", "cycle", "torus", "free-group"]},
        "params": {"type": "object"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_WINDOW = {
    "type": "object",
    "properties": {
        "base": _GROUP,
        "variant": {"enum": ["directed", "undirected"]},
        "height": {"type": "integer", "minimum": 0},
        "boundary": {
            "type": "object",
            "properties": {"mode": {"enum": ["periodic", "strip"]},
                           "radius": {"type": "integer", "minimum": 0}},
            "required": ["mode"],
            "additionalProperties": False,
        },
        "center": {"type": "string"},
    },
    "required": ["base", "variant", "height"],
    "additionalProperties": False,
}
# kind is checked by DistributionSpec so the message can explain the rule
_DIST = {
    "type": "object",
    "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
    "required": ["kind"],
    "additionalProperties": False,
}
_NUMS = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_INTS = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_PARAMS = {
    "type": "object",
    "properties": {
        "suite": {"enum": list(SUITES)},
        "x": {"type": "string"},
        "levels": _INTS,
        "n": {"type": "integer", "minimum": 0},
        "caps": _INTS,
        "statistics": {"type": "array", "items": {"enum": list(stats.TAIL_STATISTICS)}},
        "kappa0": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "transport": {"enum": ["unit", "zero"]},
        "times": _NUMS,
        "central_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "render": {"type": "boolean"},
        "steps": {"type": "integer", "minimum": 1, "maximum": 5},
        "chain_runs": {"type": "integer", "minimum": 0},
        "exact_steps": {"type": "integer", "minimum": 0, "maximum": 3},
        "seeds": {"type": "integer", "minimum": 1},
        "budget": {"type": "integer", "minimum": 1},
        "fault": {"enum": [None, "off-by-one"]},
        "chunk": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "window": _WINDOW,
        "dist": _DIST,
        "seed": {"type": "integer", "minimum": 0},
        "replicas": {"type": "integer", "minimum": 2},
        "params": _PARAMS,
    },
    "required": ["schema_version", "window"],
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    cfg = copy.deepcopy(cfg)
    cfg.setdefault("dist", {"kind": "exponential", "params": {"rate": 1.0}})
    cfg.setdefault("seed", 0)
    cfg.setdefault("params", {})
    # build once to surface semantic errors before any computation
    LatticeWindow.from_json(cfg["window"])
    DistributionSpec.from_json(cfg["dist"])
    return cfg


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(stats._plain(obj), sort_keys=True, indent=2) + "\n")


def _envelope(command: str, cfg: dict, **extra) -> dict:
    return {"tool": "edenfpp", "version": __version__, "command": command, "config": cfg,
            "config_sha256": config_digest(cfg), **extra}


def _window(cfg) -> LatticeWindow:
    return LatticeWindow.from_json(cfg["window"])


def _dist(cfg) -> DistributionSpec:
    return DistributionSpec.from_json(cfg["dist"])


def _estimator(cfg, workers: int) -> stats.EstimatorConfig:
    p = cfg["params"]
    return stats.EstimatorConfig(_window(cfg), _dist(cfg), cfg["seed"], cfg.get("replicas", 100),
                                 workers=workers, chunk=p.get("chunk", 32))


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: dict, out: Path, workers: int) -> int:
    window = _window(cfg)
    ptm = fpp.passage_times(window, WeightField(cfg["seed"], _dist(cfg)))
    text = fpp.forest_csv(ptm.forest)
    out.mkdir(parents=True, exist_ok=True)
    (out / "forest.csv").write_text(text)
    sizes = ptm.forest.level_sizes()
    summary = {"vertices": window.n_vertices, "edges": window.n_edges,
               "reachable": int((ptm.forest.root >= 0).sum()),
               "surviving_trees_at_top": int((sizes[-1] > 0).sum()),
               "max_distance": float(ptm.dist[ptm.dist < float("inf")].max())}
    _write_json(out / "snapshot.json", _envelope(
        "simulate", cfg, forest_csv="forest.csv",
        forest_csv_sha256=hashlib.sha256(text.encode()).hexdigest(), summary=summary))
    return EXIT_OK


def cmd_stats(cfg: dict, out: Path, workers: int, suite: str | None = None) -> int:
    p = cfg["params"]
    suite = suite or p.get("suite")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose one of {', '.join(SUITES)}")
    ec = _estimator(cfg, workers)
    W = ec.window
    x = None
    if "x" in p:
        from .groups import parse_element_key
        x = parse_element_key(W.base, p["x"])
    if suite == "level-mean":
        reports = [stats.level_mean_report(ec, p.get("levels", [1]), x)]
    elif suite == "level-bound":
        n = p.get("n", W.height)
        reports = [stats.level_bound_report(ec, n, p.get("levels", [n]), x)]
    elif suite == "survival":
        reports = [stats.survival_report(ec, p.get("levels", [0, W.height]), x)]
    elif suite == "tails":
        caps = p.get("caps", [W.height])
        reports = list(stats.tail_reports(ec, p.get("statistics", list(stats.TAIL_STATISTICS)),
                                          caps, x).values())
    elif suite == "vertical":
        reports = [stats.vertical_constant(ec, p.get("levels", [W.height]),
                                           p.get("kappa0", 0.05), x)]
    else:
        reports = [stats.mass_transport_audit(ec, p.get("n", W.height),
                                              p.get("transport", "unit"))]
    summaries = []
    for rep in reports:
        stem = rep.estimator if len(reports) == 1 else f"{rep.estimator}-{rep.params['statistic']}"
        rep.write(out, stem)
        summaries.append(rep.to_json())
    _write_json(out / "summary.json", _envelope("stats", cfg, suite=suite, reports=summaries))
    return _verdict_code(r.verdict for r in reports)


def _verdict_code(verdicts) -> int:
    return EXIT_FAIL if any(v == stats.FAIL for v in verdicts) else EXIT_OK


def cmd_shape(cfg: dict, out: Path, workers: int) -> int:
    W = _window(cfg)
    if W.variant != "undirected":
        raise VariantMismatchError("the shape experiment is defined for the undirected model")
    p = cfg["params"]
    ec = _estimator(cfg, workers)
    times = p.get("times", [50, 100, 200])
    frac = p.get("central_fraction", 0.5)
    rep = stats.shape_profile(ec, times, frac)
    rep.write(out, "shape")
    if p.get("render", False):
        field_ = WeightField(ec.seeds()[0], ec.dist)
        ptm = fpp.undirected_passage_times(W, field_)
        for rec in rep.details["per_t"]:
            gs = fpp.growth_set(ptm, rec["t"])
            svg = render.render_growth(gs, render.StyleConfig(cell=2),
                                       band=(rec["median_d_hat"], rec["band_halfwidth"]))
            render.write_svg(svg, out / f"growth_t{rec['t']:g}.svg",
                             render.legend(W, gs.roots, render.StyleConfig(cell=2)))
    _write_json(out / "summary.json", _envelope("shape", cfg, report=rep.to_json()))
    if len(times) < 2:
        return EXIT_OK
    return _verdict_code([rep.verdict])


def cmd_eden(cfg: dict, out: Path, workers: int) -> int:
    W = _window(cfg)
    dist = _dist(cfg)
    p = cfg["params"]
    if dist.kind != "exponential":
        raise CouplingInvalidError(
            f"the coupling test needs exponential weights, got {dist.kind!r}")
    steps = p.get("steps", 2)
    N = cfg.get("replicas", 10_000)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        mem = dynamics.memorylessness_test(W, steps, N, cfg["seed"], dist)
    mem["warnings"] = sorted({str(w.message) for w in caught})
    report = {"memorylessness": mem}
    passed = all(s["p_value"] >= 1e-3 for s in mem["steps"])
    k = p.get("exact_steps", 2)
    if k:
        exact = dynamics.exact_chain_distribution(W, k)
        coup = dynamics.coupling_distribution(W, dist, k, N, cfg["seed"])
        report["coupling_vs_exact"] = dynamics.compare_to_exact(coup, exact, N)
        passed &= report["coupling_vs_exact"]["p_value"] >= 1e-3
        runs = p.get("chain_runs", 0)
        if runs:
            chain = dynamics.chain_distribution(W, k, runs, cfg["seed"])
            report["chain_vs_exact"] = dynamics.compare_to_exact(chain, exact, runs)
            passed &= report["chain_vs_exact"]["p_value"] >= 1e-3
    report["verdict"] = stats.PASS if passed else stats.FAIL
    _write_json(out / "eden.json", _envelope("eden", cfg, report=report))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_oracle(cfg: dict, out: Path, workers: int) -> int:
    W = _window(cfg)
    p = cfg["params"]
    from .prf import derive_seed
    seeds = [derive_seed(cfg["seed"], r) for r in range(p.get("seeds", 100))]
    rep = fpp.oracle_comparison(W, seeds, _dist(cfg), p.get("budget", fpp.DEFAULT_ORACLE_BUDGET),
                                p.get("fault"))
    _write_json(out / "oracle.json", _envelope("oracle", cfg, report=rep))
    return EXIT_OK if rep["pass"] else EXIT_FAIL


def cmd_render(snapshot: str, out: Path, style: render.StyleConfig, times) -> int:
    path = Path(snapshot)
    if not path.is_file():
        raise ConfigError(f"snapshot {snapshot} not found")
    snap = json.loads(path.read_text())
    cfg = validate_config(snap["config"])
    W = _window(cfg)
    ptm = fpp.passage_times(W, WeightField(cfg["seed"], _dist(cfg)))
    csv_path = path.parent / snap.get("forest_csv", "forest.csv")
    if csv_path.is_file():
        digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
        if digest != snap.get("forest_csv_sha256"):
            raise ConfigError(f"{csv_path} does not match the digest stored in the snapshot")
    try:
        render.layout_columns(W)
    except UnsupportedLayoutError as exc:
        raise ConfigError(f"{exc} (tabular export: {csv_path.name})") from None
    render.write_svg(render.render_forest(ptm.forest, style), out / "forest.svg",
                     render.legend(W, ptm.forest.root, style))
    for t in times or []:
        gs = fpp.growth_set(ptm, t)
        render.write_svg(render.render_growth(gs, style), out / f"growth_t{t:g}.svg",
                         render.legend(W, gs.roots, style))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edenfpp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "render":
            sp.add_argument("snapshot", help="snapshot.json written by 'simulate'")
            sp.add_argument("--cell", type=int, default=6)
            sp.add_argument("--palette-seed", type=int, default=0)
            sp.add_argument("--geodesics", action="store_true")
            sp.add_argument("--times", type=float, nargs="*", default=[])
        else:
            sp.add_argument("--config", required=True)
            sp.add_argument("--seed", type=int)
        if name == "stats":
            sp.add_argument("--suite", choices=SUITES)
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--out", default="out")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = Path(args.out)
    try:
        if args.command == "render":
            style = render.StyleConfig(cell=args.cell, palette_seed=args.palette_seed,
                                       geodesics=args.geodesics)
            return cmd_render(args.snapshot, out, style, args.times)
        raw = load_config(args.config)
        if args.seed is not None and isinstance(raw, dict):
            raw["seed"] = args.seed  # flags win over the file
        cfg = validate_config(raw)
        if args.command == "stats":
            return cmd_stats(cfg, out, args.workers, args.suite)
        return {"simulate": cmd_simulate, "shape": cmd_shape, "eden": cmd_eden,
                "oracle": cmd_oracle}[args.command](cfg, out, args.workers)
    except (ConfigError, VariantMismatchError, CouplingInvalidError, UnsupportedLayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapViolationError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
