"""Minimal deterministic SVG line plots derived from report data.

No plotting dependency: reports are the product, plots are a convenience
view of numbers already in the report, and hand-rolled SVG keeps output
byte-stable across environments.
"""

from __future__ import annotations

W, H = 640, 400
MARGIN = 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _scale(vals, lo_pix, hi_pix):
    vmin, vmax = min(vals), max(vals)
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_pix(v):
        return lo_pix + (v - vmin) / span * (hi_pix - lo_pix)

    return to_pix, vmin, vmax


def line_plot_svg(path, x, series, title=""):
    """Write a polyline plot; `series` maps label -> list of y values."""
    x = [float(v) for v in x]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{W - 2 * MARGIN}" '
        f'height="{H - 2 * MARGIN}" fill="none" stroke="#333"/>',
    ]
    if title:
        parts.append(
            f'<text x="{W // 2}" y="30" text-anchor="middle" '
            f'font-family="monospace" font-size="14">{title}</text>'
        )
    all_y = [float(v) for ys in series.values() for v in ys]
    if all_y and x:
        xs, xmin, xmax = _scale(x, MARGIN, W - MARGIN)
        ys, ymin, ymax = _scale(all_y, H - MARGIN, MARGIN)
        parts.append(
            f'<text x="{MARGIN}" y="{H - 15}" font-family="monospace" '
            f'font-size="11">x: [{xmin:.6g}, {xmax:.6g}]  '
            f'y: [{ymin:.6g}, {ymax:.6g}]</text>'
        )
        for i, (label, yvals) in enumerate(series.items()):
            color = COLORS[i % len(COLORS)]
            pts = " ".join(
                f"{xs(a):.2f},{ys(float(b)):.2f}" for a, b in zip(x, yvals)
            )
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
            parts.append(
                f'<text x="{W - MARGIN - 4}" y="{MARGIN + 16 + 14 * i}" '
                f'text-anchor="end" font-family="monospace" font-size="11" '
                f'fill="{color}">{label}</text>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
