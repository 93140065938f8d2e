"""Self-contained SVG output (no plotting dependency).

CSV files are the canonical artifacts; these heatmaps and line plots are a
convenience for eyeballing runs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["svg_heatmap", "svg_line"]


def _diverging_color(x):
    """x in [-1, 1] -> blue-white-red hex color."""
    x = float(np.clip(x, -1.0, 1.0))
    if x < 0:
        r, g, b = 1.0 + x, 1.0 + x, 1.0
    else:
        r, g, b = 1.0, 1.0 - x, 1.0 - x
    return f"#{int(255*r):02x}{int(255*g):02x}{int(255*b):02x}"


def svg_heatmap(path, values, title="", cell=8):
    values = np.asarray(values, dtype=np.float64)
    n, m = values.shape
    vmax = float(np.max(np.abs(values))) or 1.0
    width, height = m * cell, n * cell + 18
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}">']
    if title:
        parts.append(f'<text x="4" y="12" font-size="11" '
                     f'font-family="sans-serif">{title}</text>')
    for i in range(n):
        for j in range(m):
            color = _diverging_color(values[i, j] / vmax)
            parts.append(f'<rect x="{j*cell}" y="{18 + (n-1-i)*cell}" '
                         f'width="{cell}" height="{cell}" fill="{color}"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def svg_line(path, xs, ys, title="", width=480, height=280, logy=False):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if logy:
        ys = np.log10(np.maximum(ys, 1e-300))
    pad = 30
    x0, x1 = float(xs.min()), float(xs.max()) or 1.0
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 == y0:
        y1 = y0 + 1.0
    px = pad + (xs - x0) / (x1 - x0 + 1e-300) * (width - 2 * pad)
    py = height - pad - (ys - y0) / (y1 - y0) * (height - 2 * pad)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" '
             f'stroke-width="1.5"/>']
    if title:
        parts.append(f'<text x="{pad}" y="16" font-size="11" '
                     f'font-family="sans-serif">{title}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
