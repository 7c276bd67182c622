"""Minimal deterministic SVG plots for the two figure styles.

Output depends only on the input numbers, so identical data produce
byte-identical files.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = 56
MAX_POINTS = 4000


def _thin(*cols):
    n = len(cols[0])
    if n <= MAX_POINTS:
        return cols
    idx = np.unique(np.linspace(0, n - 1, MAX_POINTS).round().astype(int))
    return tuple(np.asarray(c)[idx] for c in cols)


class _Axes:
    def __init__(self, xlim, ylim, width=WIDTH, height=HEIGHT, equal=False):
        self.w, self.h = width, height
        (x0, x1), (y0, y1) = xlim, ylim
        if x1 <= x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 <= y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        self.xlim, self.ylim = (x0, x1), (y0, y1)
        sx = (width - 2 * MARGIN) / (x1 - x0)
        sy = (height - 2 * MARGIN) / (y1 - y0)
        if equal:
            sx = sy = min(sx, sy)
        self.sx, self.sy = sx, sy

    def px(self, x):
        return MARGIN + (np.asarray(x) - self.xlim[0]) * self.sx

    def py(self, y):
        return self.h - MARGIN - (np.asarray(y) - self.ylim[0]) * self.sy

    def points(self, x, y):
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y)))


def _header(w, h, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{title}</text>',
    ]


def _frame(ax, xlabel, ylabel, nticks=5):
    out = []
    x0, x1 = ax.xlim
    y0, y1 = ax.ylim
    out.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{ax.points([x0, x1, x1, x0, x0], [y0, y0, y1, y1, y0])}"/>')
    for xv in np.linspace(x0, x1, nticks):
        out.append(f'<text x="{float(ax.px(xv)):.2f}" y="{float(ax.py(y0)) + 16:.2f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{xv:.3g}</text>')
    for yv in np.linspace(y0, y1, nticks):
        out.append(f'<text x="{float(ax.px(x0)) - 6:.2f}" y="{float(ax.py(yv)) + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{yv:.3g}</text>')
    out.append(f'<text x="{(ax.px(x0) + ax.px(x1)) / 2:.2f}" y="{ax.h - 14}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    out.append(f'<text x="16" y="{(ax.py(y0) + ax.py(y1)) / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 16 {(ax.py(y0) + ax.py(y1)) / 2:.2f})">{ylabel}</text>')
    return out


def time_series_svg(t, values, guard=None, title="", ylabel="r", guard_label="S_mu") -> str:
    """Trace of one coordinate against time, with the switching level dashed."""
    t, values = _thin(np.asarray(t, float), np.asarray(values, float))
    lo = float(min(values.min(), guard if guard is not None else values.min()))
    hi = float(max(values.max(), guard if guard is not None else values.max()))
    pad = 0.05 * (hi - lo or 1.0)
    ax = _Axes((float(t.min()), float(t.max())), (lo - pad, hi + pad))
    out = _header(ax.w, ax.h, title) + _frame(ax, "t", ylabel)
    if guard is not None:
        out.append(f'<polyline id="guard" fill="none" stroke="#c03030" stroke-width="1.5" stroke-dasharray="6,4" '
                   f'points="{ax.points(ax.xlim, [guard, guard])}"/>')
        out.append(f'<text x="{float(ax.px(ax.xlim[1])) - 4:.2f}" y="{float(ax.py(guard)) - 6:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12" fill="#c03030">{guard_label}</text>')
    out.append(f'<polyline id="trace" fill="none" stroke="#7030a0" stroke-width="1.5" stroke-dasharray="5,3" '
               f'points="{ax.points(t, values)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def disk_svg(x, y, radius=1.0, title="") -> str:
    """Planar trajectory inside a disk whose boundary is the switching surface."""
    x, y = _thin(np.asarray(x, float), np.asarray(y, float))
    lim = 1.1 * max(radius, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    ax = _Axes((-lim, lim), (-lim, lim), width=HEIGHT + 60, height=HEIGHT + 60, equal=True)
    out = _header(ax.w, ax.h, title) + _frame(ax, "x", "y")
    cx, cy = float(ax.px(0.0)), float(ax.py(0.0))
    out.append(f'<circle id="guard" cx="{cx:.2f}" cy="{cy:.2f}" r="{radius * ax.sx:.2f}" fill="none" '
               f'stroke="#c03030" stroke-width="1.5"/>')
    out.append(f'<polyline id="trace" fill="none" stroke="#1f5fa0" stroke-width="1.2" points="{ax.points(x, y)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
