"""Minimal, byte-deterministic SVG line plots."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _panel(series, x0, y0, w, h, title, log_y):
    out = [f'<g transform="translate({x0},{y0})">']
    out.append(f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#444"/>')
    out.append(f'<text x="{w / 2:.1f}" y="-8" text-anchor="middle" font-size="13">{title}</text>')
    ys = []
    for _, values in series:
        for v in values:
            if log_y and v <= 0:
                continue
            ys.append(math.log10(v) if log_y else float(v))
    lo, hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    n = max(len(v) for _, v in series)
    for i, (label, values) in enumerate(series):
        pts = []
        for t, v in enumerate(values):
            if log_y and v <= 0:
                continue
            yv = math.log10(v) if log_y else float(v)
            px = w * (t / max(n - 1, 1))
            py = h - h * (yv - lo) / (hi - lo)
            pts.append(f"{_fmt(px)},{_fmt(py)}")
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        out.append(f'<text x="{w - 4}" y="{16 + 14 * i}" text-anchor="end" font-size="11" fill="{color}">{label}</text>')
    low_label = f"1e{lo:.1f}" if log_y else f"{lo:.3g}"
    high_label = f"1e{hi:.1f}" if log_y else f"{hi:.3g}"
    out.append(f'<text x="-4" y="{h}" text-anchor="end" font-size="10">{low_label}</text>')
    out.append(f'<text x="-4" y="10" text-anchor="end" font-size="10">{high_label}</text>')
    out.append(f'<text x="0" y="{h + 14}" font-size="10">1</text>')
    out.append(f'<text x="{w}" y="{h + 14}" text-anchor="end" font-size="10">{n}</text>')
    out.append("</g>")
    return out


def line_plot_svg(panels: Sequence[tuple[str, Sequence[tuple[str, Sequence[float]]]]],
                  log_y: bool = False, panel_width: int = 360, panel_height: int = 220) -> str:
    """Render panels side by side. Each panel is ``(title, [(label, values), ...])``."""
    margin = 50
    width = margin + len(panels) * (panel_width + margin)
    height = panel_height + 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, (title, series) in enumerate(panels):
        parts += _panel(series, margin + i * (panel_width + margin), margin, panel_width, panel_height, title, log_y)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(svg: str, path: str | Path) -> None:
    Path(path).write_text(svg)
