"""Minimal deterministic SVG line/scatter plots (no external assets)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=40, bottom=50)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi) + 1e-300:
        out.append(v)
        v += step
    return out


def line_plot(series, title="", xlabel="", ylabel="", markers=True) -> str:
    """Render ``series`` as an SVG document.

    Parameters
    ----------
    series : list of (label, xs, ys)
    """
    if not series:
        raise ValueError("nothing to plot")
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys if math.isfinite(float(y))]
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all + [0.0]), max(ys_all + [0.0])
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    if yhi == ylo:
        yhi = ylo + 1
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad if ylo < 0 else ylo, yhi + pad

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return MARGIN["top"] + (1 - (y - ylo) / (yhi - ylo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(xlo, xhi):
        out.append(
            f'<line x1="{_fmt(sx(t))}" y1="{MARGIN["top"] + ph}" x2="{_fmt(sx(t))}" '
            f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>'
            f'<text x="{_fmt(sx(t))}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:g}</text>'
        )
    for t in _ticks(ylo, yhi):
        out.append(
            f'<line x1="{MARGIN["left"] - 5}" y1="{_fmt(sy(t))}" x2="{MARGIN["left"]}" '
            f'y2="{_fmt(sy(t))}" stroke="black"/>'
            f'<text x="{MARGIN["left"] - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:.3g}</text>'
        )
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
        f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.0f}) rotate(-90)" '
        f'text-anchor="middle">{escape(ylabel)}</text>'
    )
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(sx(float(x)), sy(float(y))) for x, y in zip(xs, ys) if math.isfinite(float(y))]
        if len(pts) > 1:
            path = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if markers:
            out.extend(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5" fill="{color}"/>' for a, b in pts)
        ly = MARGIN["top"] + 10 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{lx + 26}" y="{ly + 4}">{escape(str(label))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
