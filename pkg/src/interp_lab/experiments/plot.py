"""Minimal static SVG line plots of sweep CSVs (mean line with a std band)."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..errors import MissingColumn

WIDTH, HEIGHT, PAD = 640, 420, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def series(rows, x, y, group=None) -> dict:
    """``{group: [(x, mean, std), ...]}`` sorted by x; blank cells skipped."""
    buckets: dict = {}
    for r in rows:
        if r[x] == "" or r[y] == "":
            continue
        g = r[group] if group else ""
        buckets.setdefault(g, {}).setdefault(float(r[x]), []).append(float(r[y]))
    return {
        g: [(xv, float(np.mean(v)), float(np.std(v))) for xv, v in sorted(pts.items())]
        for g, pts in sorted(buckets.items())
    }


def plot_csv(csv_path, x: str, y: str, group: str | None = None, out=None) -> Path:
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    for col in (x, y) + ((group,) if group else ()):
        if col not in header:
            raise MissingColumn(f"{csv_path} has no column {col!r}")
    data = series(rows, x, y, group)
    out = Path(out) if out else csv_path.with_suffix(".svg")
    out.write_text(render_svg(data, x, y))
    return out


def _scale(lo, hi, a, b):
    if hi == lo:
        return lambda v: (a + b) / 2
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def render_svg(data: dict, xlabel: str, ylabel: str) -> str:
    pts = [p for s in data.values() for p in s]
    xs = [p[0] for p in pts] or [0.0]
    ys = [v for p in pts for v in (p[1] - p[2], p[1] + p[2])] or [0.0]
    sx = _scale(min(xs), max(xs), PAD, WIDTH - PAD / 2)
    sy = _scale(min(ys), max(ys), HEIGHT - PAD, PAD / 2)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD / 2}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{PAD}" y2="{PAD / 2}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" transform="rotate(-90 15 {HEIGHT / 2})" text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for v in (min(xs), max(xs)):
        parts.append(f'<text x="{sx(v):.2f}" y="{HEIGHT - PAD + 18}" text-anchor="middle" font-size="11">{v:.4g}</text>')
    for v in (min(ys), max(ys)):
        parts.append(f'<text x="{PAD - 5}" y="{sy(v):.2f}" text-anchor="end" font-size="11">{v:.4g}</text>')
    for idx, (name, s) in enumerate(data.items()):
        color = COLORS[idx % len(COLORS)]
        upper = [f"{sx(a):.2f},{sy(m + d):.2f}" for a, m, d in s]
        lower = [f"{sx(a):.2f},{sy(m - d):.2f}" for a, m, d in reversed(s)]
        parts.append(f'<polygon class="band" points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(a):.2f},{sy(m):.2f}" for a, m, _ in s)
        parts.append(f'<polyline class="series" points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        if name != "":
            parts.append(f'<text x="{WIDTH - PAD}" y="{PAD / 2 + 16 * (idx + 1)}" fill="{color}" font-size="12">{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
