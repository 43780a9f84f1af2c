"""Minimal deterministic SVG polyline plots (no third-party plotting).

Best-effort output: fixed canvas, fixed palette, `%.6g` coordinates. The
geometry is deterministic for identical inputs; no timestamps or random
ids are emitted.
"""

import numpy as np

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H, _PAD = 640, 480, 40


def _fmt(v):
    return f"{v:.6g}"


def polyline_plot(path, curves, title="", xlabel="", ylabel=""):
    """Write an SVG of (x, y) polylines.

    ``curves``: list of (x_array, y_array) pairs. Degenerate bounding
    boxes are padded so single points stay visible.
    """
    xs = np.concatenate([np.asarray(c[0], dtype=float) for c in curves])
    ys = np.concatenate([np.asarray(c[1], dtype=float) for c in curves])
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not finite.any():
        raise ValueError("nothing finite to plot")
    x0, x1 = float(xs[finite].min()), float(xs[finite].max())
    y0, y1 = float(ys[finite].min()), float(ys[finite].max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def tx(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def ty(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#cccccc"/>',
    ]
    if title:
        lines.append(f'<text x="{_W // 2}" y="24" text-anchor="middle" '
                     f'font-family="monospace" font-size="14">{title}</text>')
    if xlabel:
        lines.append(f'<text x="{_W // 2}" y="{_H - 8}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12">{xlabel}</text>')
    if ylabel:
        lines.append(f'<text x="14" y="{_H // 2}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12" '
                     f'transform="rotate(-90 14 {_H // 2})">{ylabel}</text>')
    for i, (cx, cy) in enumerate(curves):
        cx = np.asarray(cx, dtype=float)
        cy = np.asarray(cy, dtype=float)
        good = np.isfinite(cx) & np.isfinite(cy)
        pts = " ".join(f"{_fmt(tx(a))},{_fmt(ty(b))}" for a, b in zip(cx[good], cy[good]))
        color = _PALETTE[i % len(_PALETTE)]
        lines.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
