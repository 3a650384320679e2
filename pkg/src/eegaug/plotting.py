"""Dependency-free SVG emitters for sweep curves and PCA scatters."""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f")

WIDTH, HEIGHT = 720, 440
MARGIN = 56


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo or 1.0
    return [(v - lo) / span * (out_hi - out_lo) + out_lo for v in vals]


def _axis_ticks(lo, hi, n=5):
    return list(np.linspace(lo, hi, n))


def svg_curves(series, title, x_label, y_label):
    """Line plot of {name: [(x, y), ...]} as an SVG string."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
             f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" '
             f'font-size="16">{title}</text>']
    # axes
    parts.append(f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
                 f'y2="{HEIGHT - MARGIN}" stroke="black"/>')
    parts.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
                 f'y2="{HEIGHT - MARGIN}" stroke="black"/>')
    for tx in _axis_ticks(x_lo, x_hi):
        px = _scale([tx], x_lo, x_hi, MARGIN, WIDTH - MARGIN)[0]
        parts.append(f'<text x="{px:.1f}" y="{HEIGHT - MARGIN + 18}" '
                     f'text-anchor="middle" font-size="11">{tx:g}</text>')
    for ty in _axis_ticks(y_lo, y_hi):
        py = _scale([ty], y_lo, y_hi, HEIGHT - MARGIN, MARGIN)[0]
        parts.append(f'<text x="{MARGIN - 8}" y="{py + 4:.1f}" text-anchor="end" '
                     f'font-size="11">{ty:.3g}</text>')
    parts.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle" font-size="12">{x_label}</text>')
    parts.append(f'<text x="16" y="{HEIGHT / 2:.0f}" font-size="12" '
                 f'transform="rotate(-90 16 {HEIGHT / 2:.0f})" '
                 f'text-anchor="middle">{y_label}</text>')
    for i, (name, pts) in enumerate(sorted(series.items())):
        color = PALETTE[i % len(PALETTE)]
        px = _scale([p[0] for p in pts], x_lo, x_hi, MARGIN, WIDTH - MARGIN)
        py = _scale([p[1] for p in pts], y_lo, y_hi, HEIGHT - MARGIN, MARGIN)
        path = " ".join(f"{'M' if j == 0 else 'L'}{x:.1f},{y:.1f}"
                        for j, (x, y) in enumerate(zip(px, py)))
        parts.append(f'<path d="{path}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        for x, y in zip(px, py):
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
        ly = MARGIN + 16 * i
        parts.append(f'<rect x="{WIDTH - MARGIN - 150}" y="{ly - 9}" width="12" '
                     f'height="12" fill="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN - 132}" y="{ly + 2}" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def pca_project(rows, reference=None):
    """2-D PCA coordinates of rows (fit on `reference` when given)."""
    ref = np.asarray(reference if reference is not None else rows, dtype=np.float64)
    center = ref.mean(axis=0)
    _, _, vt = np.linalg.svd(ref - center, full_matrices=False)
    return (np.asarray(rows, dtype=np.float64) - center) @ vt[:2].T


def svg_scatter(groups, title):
    """Scatter of {name: (points, filled)} where points is (n, 2)."""
    all_pts = np.concatenate([np.asarray(p) for p, _ in groups.values()])
    x_lo, x_hi = all_pts[:, 0].min(), all_pts[:, 0].max()
    y_lo, y_hi = all_pts[:, 1].min(), all_pts[:, 1].max()
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
             f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" '
             f'font-size="16">{title}</text>']
    for i, (name, (pts, filled)) in enumerate(sorted(groups.items())):
        color = PALETTE[i % len(PALETTE)]
        pts = np.asarray(pts)
        px = _scale(pts[:, 0], x_lo, x_hi, MARGIN, WIDTH - MARGIN)
        py = _scale(pts[:, 1], y_lo, y_hi, HEIGHT - MARGIN, MARGIN)
        fill = color if filled else "none"
        for x, y in zip(px, py):
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{fill}" '
                         f'stroke="{color}"/>')
        ly = MARGIN + 16 * i
        parts.append(f'<circle cx="{WIDTH - MARGIN - 144}" cy="{ly - 3}" r="4" '
                     f'fill="{color if filled else "none"}" stroke="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN - 132}" y="{ly + 2}" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
