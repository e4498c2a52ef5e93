"""SVG scenes of forests and growth sets.

Cells are laid out with base positions along x and levels along y (level 0
at the bottom).  Each root gets a colour derived from a hash of its
canonical key; collisions are resolved by re-hashing in canonical root
order, so the map is injective within a scene and stable across renders.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import groups
from .errors import ConfigError, UnsupportedLayoutError
from .fpp import Forest, GrowthSet, inner_boundary_mask
from .lattice import LatticeWindow
from .prf import mix64

EMPTY = "#ffffff"
BOUNDARY_STROKE = "#000000"
BAND_STROKE = "#d00000"
GEODESIC_STROKE = "#202020"
_RESERVED = {EMPTY, BOUNDARY_STROKE, BAND_STROKE, GEODESIC_STROKE}
SVG_NS = "http://www.w3.org/2000/svg"


@dataclass(frozen=True)
class StyleConfig:
    cell: int = 6
    palette_seed: int = 0
    trees: bool = True
    geodesics: bool = False
    boundary: bool = True
    band: bool = True

    def __post_init__(self) -> None:
        if self.cell < 1:
            raise ConfigError("cell size must be at least 1 pixel")


# ---------------------------------------------------------------------------
# layout and colours


def layout_columns(window: LatticeWindow) -> list[int]:
    """Base indices drawn as columns, left to right.

    One-dimensional bases use every element; two-dimensional abelian bases
    use the slice through the window centre along the first coordinate.
    """
    base = window.base
    if base.kind == "free-group":
        raise UnsupportedLayoutError(
            "free-group bases have no planar layout; export the forest table (CSV) instead")
    if base.rank == 1:
        cols = list(range(window.B))
    elif base.rank == 2:
        c = window.center
        cols = [i for i, x in enumerate(window.base_elements) if x[1:] == c[1:]]
    else:
        raise UnsupportedLayoutError(
            f"rank-{base.rank} bases are not rendered; export the forest table (CSV) instead")
    return sorted(cols, key=lambda i: window.base_elements[i][0])


def root_colors(window: LatticeWindow, roots, palette_seed: int = 0) -> dict[int, str]:
    """Injective colour map for the given base indices."""
    used = set(_RESERVED)
    out = {}
    for b in sorted(set(int(r) for r in roots if r >= 0),
                    key=lambda i: groups.order_key(window.base_elements[i])):
        key = groups.canonical_key(window.base, window.base_elements[b])
        h = mix64(int.from_bytes(key, "big") ^ mix64(palette_seed))
        while True:
            col = f"#{h & 0xFFFFFF:06x}"
            if col not in used:
                break
            h = mix64(h + 1)
        used.add(col)
        out[b] = col
    return out


def _root_key(window: LatticeWindow, b: int) -> str:
    return groups.element_key(window.base, window.base_elements[b])


# ---------------------------------------------------------------------------
# drawing


class _Canvas:
    def __init__(self, width: int, height: int, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="{SVG_NS}" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f"<title>{title}</title>",
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="{EMPTY}"/>',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _cells(canvas: _Canvas, window: LatticeWindow, cols, roots2d, colors, style,
           boundary2d=None) -> None:
    H, c = window.height, style.cell
    canvas.add('<g id="cells">')
    for j, b in enumerate(cols):
        for n in range(H + 1):
            r = int(roots2d[n, b])
            fill = colors.get(r, EMPTY) if style.trees else (EMPTY if r < 0 else "#c0c0c0")
            cls = "cell"
            extra = ""
            if boundary2d is not None and boundary2d[n, b]:
                cls = "cell boundary"
                extra = f' stroke="{BOUNDARY_STROKE}" stroke-width="{max(1, c // 4)}"'
            root_attr = f' data-root="{_root_key(window, r)}"' if r >= 0 else ""
            canvas.add(f'<rect class="{cls}" x="{j * c}" y="{(H - n) * c}" width="{c}" '
                       f'height="{c}" fill="{fill}"{extra} data-col="{j}" data-level="{n}"'
                       f'{root_attr}/>')
    canvas.add("</g>")


def _geodesic_lines(canvas: _Canvas, forest: Forest, cols, style, mask=None) -> None:
    W = forest.window
    H, c, B = W.height, style.cell, W.B
    pos = {b: j for j, b in enumerate(cols)}
    pred = forest.ptm.pred
    canvas.add('<g id="geodesics">')
    for v in range(B, W.n_vertices):
        p = int(pred[v])
        if p < 0 or (mask is not None and not mask[v]):
            continue
        bv, bp = v % B, p % B
        if bv not in pos or bp not in pos:
            continue
        x1, y1 = pos[bv] * c + c / 2, (H - v // B) * c + c / 2
        x2, y2 = pos[bp] * c + c / 2, (H - p // B) * c + c / 2
        canvas.add(f'<line x1="{x1:g}" y1="{y1:g}" x2="{x2:g}" y2="{y2:g}" '
                   f'stroke="{GEODESIC_STROKE}" stroke-width="{max(1, c // 6)}"/>')
    canvas.add("</g>")


def render_forest(forest: Forest, style: StyleConfig | None = None) -> str:
    """One cell per vertex, coloured by the root of its tree."""
    style = style or StyleConfig()
    W = forest.window
    cols = layout_columns(W)
    roots = forest.root.reshape(W.height + 1, W.B)
    colors = root_colors(W, roots[:, cols].ravel(), style.palette_seed)
    canvas = _Canvas(len(cols) * style.cell, (W.height + 1) * style.cell,
                     f"geodesic forest, {W!r}")
    _cells(canvas, W, cols, roots, colors, style)
    if style.geodesics:
        _geodesic_lines(canvas, forest, cols, style)
    return canvas.text()


def band_levels(t: float, d_hat: float, width: float, height: int) -> list[int]:
    """Rows of the flatness band lines, clipped to the window."""
    levels = sorted({int(round(t * (d_hat - width))), int(round(t * (d_hat + width)))})
    return [k for k in levels if 0 <= k <= height]


def render_growth(gs: GrowthSet, style: StyleConfig | None = None,
                  band: tuple[float, float] | None = None) -> str:
    """Occupied cells of the growth set coloured by root, its inner boundary
    outlined, and optional horizontal band lines at t (d_hat -/+ width)."""
    style = style or StyleConfig()
    W = gs.window
    cols = layout_columns(W)
    roots = gs.roots.reshape(W.height + 1, W.B)
    bd = inner_boundary_mask(gs.mask, W).reshape(W.height + 1, W.B) if style.boundary else None
    colors = root_colors(W, roots[:, cols].ravel(), style.palette_seed)
    width_px = len(cols) * style.cell
    canvas = _Canvas(width_px, (W.height + 1) * style.cell, f"growth set at t={gs.t:g}, {W!r}")
    _cells(canvas, W, cols, roots, colors, style, bd)
    if style.geodesics:
        _geodesic_lines(canvas, gs.ptm.forest, cols, style, gs.mask)
    if band is not None and style.band:
        canvas.add('<g id="band">')
        for k in band_levels(gs.t, band[0], band[1], W.height):
            y = (W.height - k) * style.cell + style.cell / 2
            canvas.add(f'<line class="band" data-level="{k}" x1="0" y1="{y:g}" '
                       f'x2="{width_px}" y2="{y:g}" stroke="{BAND_STROKE}" stroke-width="1"/>')
        canvas.add("</g>")
    return canvas.text()


# ---------------------------------------------------------------------------
# legend, files and parse-back


def legend(window: LatticeWindow, roots, style: StyleConfig | None = None) -> dict[str, str]:
    style = style or StyleConfig()
    cols = layout_columns(window)
    r2 = np.asarray(roots).reshape(window.height + 1, window.B)[:, cols]
    colors = root_colors(window, r2.ravel(), style.palette_seed)
    return {_root_key(window, b): col for b, col in colors.items()}


def write_svg(svg: str, path, legend_map: dict[str, str] | None = None) -> Path:
    """Write the SVG and, if given, a sidecar ``<name>.legend.json``."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(svg)
    if legend_map is not None:
        p.with_suffix(".legend.json").write_text(
            json.dumps(legend_map, sort_keys=True, indent=2) + "\n")
    return p


@dataclass
class ParsedCell:
    col: int
    level: int
    fill: str
    boundary: bool
    root: str | None


def parse_svg(svg: str) -> tuple[list[ParsedCell], list[int]]:
    """Cells and band-line levels recovered from a rendered scene."""
    root = ET.fromstring(svg.encode())
    cells, bands = [], []
    for el in root.iter(f"{{{SVG_NS}}}rect"):
        cls = el.get("class", "").split()
        if "cell" not in cls:
            continue
        cells.append(ParsedCell(int(el.get("data-col")), int(el.get("data-level")),
                                el.get("fill"), "boundary" in cls, el.get("data-root")))
    for el in root.iter(f"{{{SVG_NS}}}line"):
        if el.get("class") == "band":
            bands.append(int(el.get("data-level")))
    return cells, bands
