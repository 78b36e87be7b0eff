"""Tiny dependency-free SVG line plots (axes, ticks, legend)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

__all__ = ["line_plot"]

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(v)
        v += step
    return out


def _fmt(v):
    return f"{v:.4g}"


def line_plot(series, title="", xlabel="", ylabel="", logx=False, logy=False) -> str:
    """Render ``series`` (list of ``(label, xs, ys)``) as an SVG document.

    Non-finite points, and non-positive points on log axes, are skipped.
    """
    fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    fy = (lambda v: math.log10(v)) if logy else (lambda v: v)

    def ok(x, y):
        if not (math.isfinite(x) and math.isfinite(y)):
            return False
        return (x > 0 or not logx) and (y > 0 or not logy)

    clean = []
    for label, xs, ys in series:
        pts = [(fx(float(x)), fy(float(y))) for x, y in zip(xs, ys) if ok(float(x), float(y))]
        clean.append((label, pts))
    allpts = [p for _, pts in clean for p in pts] or [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in allpts), max(p[0] for p in allpts)
    y0, y1 = min(p[1] for p in allpts), max(p[1] for p in allpts)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        X = px(v)
        label = _fmt(10**v) if logx else _fmt(v)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{label}</text>')
    for v in _ticks(y0, y1):
        Y = py(v)
        label = _fmt(10**v) if logy else _fmt(v)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for k, (label, pts) in enumerate(clean):
        color = PALETTE[k % len(PALETTE)]
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 14 + 16 * k
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
