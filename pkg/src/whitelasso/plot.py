"""Deterministic SVG line charts from a results CSV.

One panel per rho (optionally per (p, rho)); x is n, one series per
estimator.  Solid lines are means, dashed lines the empirical 2.5/97.5%
band.  Output carries no timestamps or random ids, so equal input gives
equal bytes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

Y_COLUMNS = ("mean_l2_scaled", "mean_linf", "sign_rate")
BAND_COLUMNS = ("ci_lo_l2", "ci_hi_l2")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
Y_LABELS = {"mean_l2_scaled": "p^-1/2 l2 error", "mean_linf": "l-inf error",
            "sign_rate": "sign recovery rate"}

W, H = 420, 320
LEFT, RIGHT, TOP, BOTTOM = 62, 16, 34, 46


class MissingColumns(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing columns: " + ", ".join(self.missing))


@dataclass(frozen=True)
class ChartSpec:
    y: str = "mean_l2_scaled"
    bands: bool = True
    panel_by_p: bool = False
    y_label: str | None = None
    title: str | None = None

    def __post_init__(self):
        if self.y not in Y_COLUMNS:
            raise ValueError(f"y must be one of {Y_COLUMNS}, got {self.y!r}")

    def required(self) -> list[str]:
        cols = ["estimator", "n", "rho", self.y]
        if self.panel_by_p:
            cols.append("p")
        if self.draw_bands:
            cols += list(BAND_COLUMNS)
        return cols

    @property
    def draw_bands(self) -> bool:
        # the percentile band is only recorded for the scaled l2 error
        return self.bands and self.y == "mean_l2_scaled"


def read_rows(text: str, spec: ChartSpec) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [c for c in spec.required() if c not in header]
    if missing:
        raise MissingColumns(missing)
    return list(reader)


def _num(v: str) -> float:
    try:
        return float(v)
    except ValueError:
        return math.nan


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def _panels(rows: list[dict], spec: ChartSpec):
    keys: list[tuple] = []
    for r in rows:
        key = (r["p"], r["rho"]) if spec.panel_by_p else (r["rho"],)
        if key not in keys:
            keys.append(key)
    for key in keys:
        sel = [r for r in rows
               if ((r["p"], r["rho"]) if spec.panel_by_p else (r["rho"],)) == key]
        yield key, sel


def _estimators(rows):
    out = []
    for r in rows:
        if r["estimator"] not in out:
            out.append(r["estimator"])
    return out


def _series(rows, est, col):
    pts = sorted((int(_num(r["n"])), _num(r[col])) for r in rows if r["estimator"] == est)
    return [(x, y) for x, y in pts if math.isfinite(y)]


def _panel_body(rows, spec: ChartSpec, estimators, title: str, ox: float, oy: float) -> list[str]:
    cols = [spec.y] + (list(BAND_COLUMNS) if spec.draw_bands else [])
    xs = [int(_num(r["n"])) for r in rows]
    ys = [v for r in rows for c in cols for v in [_num(r[c])] if math.isfinite(v)]
    x_lo, x_hi = min(xs), max(xs)
    if spec.y == "sign_rate":
        y_lo, y_hi = 0.0, 1.0
    else:
        y_lo = 0.0
        y_hi = max(ys) * 1.05 if ys and max(ys) > 0 else 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        if x_hi == x_lo:
            return ox + LEFT + pw / 2
        return ox + LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        y = min(max(y, y_lo), y_hi)
        return oy + TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [f'<g class="panel">',
           f'<rect x="{ox + LEFT}" y="{oy + TOP}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="#333"/>',
           f'<text x="{ox + W / 2:.1f}" y="{oy + 20}" text-anchor="middle" '
           f'font-size="14">{escape(title)}</text>']
    xt = sorted(set(xs)) if len(set(xs)) <= 6 else _ticks(x_lo, x_hi)
    for t in xt:
        out.append(f'<text x="{sx(t):.2f}" y="{oy + TOP + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{ox + LEFT - 4}" x2="{ox + LEFT}" y1="{sy(t):.2f}" '
                   f'y2="{sy(t):.2f}" stroke="#333"/>')
        out.append(f'<text x="{ox + LEFT - 6}" y="{sy(t) + 3:.2f}" text-anchor="end" '
                   f'font-size="10">{_fmt(t)}</text>')
    out.append(f'<text x="{ox + LEFT + pw / 2:.1f}" y="{oy + H - 10}" text-anchor="middle" '
               f'font-size="12">n</text>')
    out.append(f'<text x="{ox + 14}" y="{oy + TOP + ph / 2:.1f}" text-anchor="middle" '
               f'font-size="12" transform="rotate(-90 {ox + 14} {oy + TOP + ph / 2:.1f})">'
               f'{escape(spec.y_label or Y_LABELS[spec.y])}</text>')
    for k, est in enumerate(estimators):
        color = PALETTE[k % len(PALETTE)]
        for col, dash in [(spec.y, "")] + [(c, ' stroke-dasharray="5,4"')
                                           for c in (BAND_COLUMNS if spec.draw_bands else ())]:
            pts = _series(rows, est, col)
            if not pts:
                continue
            if len(pts) == 1:
                x, y = pts[0]
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
                continue
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                       f'stroke-width="1.6"{dash}/>')
        ly = oy + TOP + 12 + 14 * k
        lx = ox + W - RIGHT - 90
        out.append(f'<line x1="{lx}" x2="{lx + 16}" y1="{ly}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 20}" y="{ly + 4}" font-size="11">{escape(est)}</text>')
    out.append("</g>")
    return out


def _title(key, spec: ChartSpec) -> str:
    if spec.title is not None:
        return spec.title
    if spec.panel_by_p:
        return f"p = {key[0]}, rho = {key[1]}"
    return f"rho = {key[0]}"


def _document(width: float, height: float, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">')
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head,
                      f'<rect width="{width}" height="{height}" fill="white"/>',
                      *body, "</svg>"]) + "\n"


def render(text: str, spec: ChartSpec) -> dict[str, str]:
    """Map of file stem to SVG text: one per panel plus ``all`` with every panel in a grid."""
    rows = read_rows(text, spec)
    if not rows:
        raise ValueError("results CSV has no data rows")
    estimators = _estimators(rows)
    panels = list(_panels(rows, spec))
    out = {}
    grid_body = []
    cols = min(len(panels), 2) if len(panels) == 4 else min(len(panels), 3)
    for i, (key, sel) in enumerate(panels):
        title = _title(key, spec)
        out["_".join(f"{name}{v}" for name, v in
                     zip(("p", "rho") if spec.panel_by_p else ("rho",), key))] = _document(
            W, H, _panel_body(sel, spec, estimators, title, 0, 0))
        grid_body += _panel_body(sel, spec, estimators, title, (i % cols) * W, (i // cols) * H)
    nrows = math.ceil(len(panels) / cols)
    out["all"] = _document(cols * W, nrows * H, grid_body)
    return out
