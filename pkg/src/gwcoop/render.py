"""Heatmaps of phase grids as binary PPM (P6) or SVG, with the h(p, q) = 1 curve.

q runs along the horizontal axis and p up the vertical one.  Values in
[0, 1] map linearly to gray levels, light meaning survival.  Grids produced by
the ``h_indicator`` estimator are shown as the indicator of h > 1.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from gwcoop.coop import critical_q
from gwcoop.errors import NoCrossing
from gwcoop.phase import PhaseGrid

OVERLAY_RGB = (0, 160, 0)


def display_values(grid: PhaseGrid) -> np.ndarray:
    if grid.meta.estimator_name == "h_indicator":
        return (grid.values > 1.0).astype(float)
    return np.clip(np.nan_to_num(grid.values), 0.0, 1.0)


def critical_curve(p_values) -> list[tuple[float, float]]:
    """(critical_q(p), p) for every p where h(p, .) = 1 has a root."""
    pts = []
    for p in p_values:
        try:
            pts.append((critical_q(float(p)), float(p)))
        except NoCrossing:
            continue
    return pts


def _overlay_points(grid: PhaseGrid, samples: int = 201):
    p_lo, p_hi = float(grid.p_axis[0]), float(grid.p_axis[-1])
    return critical_curve(np.linspace(p_lo, p_hi, samples))


def _axis_pos(v: float, axis: np.ndarray, cells: int, scale: int) -> float:
    """Pixel coordinate of value ``v``, with axis[k] at the centre of cell k."""
    if axis.size == 1:
        return cells * scale / 2
    return ((v - axis[0]) / (axis[-1] - axis[0]) * (cells - 1) + 0.5) * scale


def to_ppm(grid: PhaseGrid, scale: int = 1, overlay: bool = False) -> bytes:
    vals = display_values(grid)
    gray = np.rint(vals * 255).astype(np.uint8)
    # Top image row is the largest p.
    img = np.repeat(np.repeat(gray[::-1, :], scale, axis=0), scale, axis=1)
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    h, w = img.shape
    if overlay:
        pts = _overlay_points(grid)
        pix = [
            (_axis_pos(q, grid.q_axis, grid.q_axis.size, scale), h - _axis_pos(p, grid.p_axis, grid.p_axis.size, scale))
            for q, p in pts
        ]
        for (x0, y0), (x1, y1) in zip(pix, pix[1:]):
            n = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
            for t in np.linspace(0.0, 1.0, n + 1):
                c, r = int(x0 + t * (x1 - x0)), int(y0 + t * (y1 - y0))
                if 0 <= r < h and 0 <= c < w:
                    rgb[r, c] = OVERLAY_RGB
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(rgb).tobytes()


def to_svg(grid: PhaseGrid, cell: int = 8, overlay: bool = False) -> str:
    vals = display_values(grid)
    n_p, n_q = vals.shape
    margin = 40
    w, h = n_q * cell, n_p * cell
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w + 2 * margin}" height="{h + 2 * margin}">',
        f'<g transform="translate({margin},{margin})">',
    ]
    for i in range(n_p):
        y = (n_p - 1 - i) * cell
        for j in range(n_q):
            g = int(round(vals[i, j] * 255))
            out.append(f'<rect x="{j * cell}" y="{y}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>')
    if overlay:
        pts = _overlay_points(grid)
        if pts:
            coords = " ".join(
                f"{_axis_pos(q, grid.q_axis, n_q, cell):.3f},{h - _axis_pos(p, grid.p_axis, n_p, cell):.3f}"
                for q, p in pts
            )
            r, g, b = OVERLAY_RGB
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="rgb({r},{g},{b})" '
                'stroke-width="2" stroke-dasharray="6,4"/>'
            )
            out.append(f'<text x="{w - 70}" y="-8" font-size="12" fill="rgb({r},{g},{b})">h(p,q)=1</text>')
    out.append(f'<text x="{w / 2}" y="{h + 28}" font-size="14" text-anchor="middle">q</text>')
    out.append(f'<text x="-26" y="{h / 2}" font-size="14" text-anchor="middle">p</text>')
    out.append(f'<text x="0" y="{h + 16}" font-size="10">{grid.q_axis[0]:g}</text>')
    out.append(f'<text x="{w}" y="{h + 16}" font-size="10" text-anchor="end">{grid.q_axis[-1]:g}</text>')
    out.append(f'<text x="-6" y="{h}" font-size="10" text-anchor="end">{grid.p_axis[0]:g}</text>')
    out.append(f'<text x="-6" y="10" font-size="10" text-anchor="end">{grid.p_axis[-1]:g}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_heatmap(grid: PhaseGrid, path, overlay: bool = False, fmt: str = "ppm", scale: int = 1) -> Path:
    path = Path(path)
    if fmt == "ppm":
        path.write_bytes(to_ppm(grid, scale=scale, overlay=overlay))
    elif fmt == "svg":
        path.write_text(to_svg(grid, cell=max(scale, 1) * 8, overlay=overlay), encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}; use ppm or svg")
    return path


def read_ppm(path) -> tuple[int, int, np.ndarray]:
    """(width, height, HxWx3 uint8 array) of a P6 file written by :func:`to_ppm`."""
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not a P6 file with maxval 255")
    w, h = map(int, dims.split())
    return w, h, np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
