"""Dependency-free SVG figures: dissimilarity heatmap and alignment plot."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

# light -> dark sequential ramp; larger dissimilarity is darker
_RAMP = [
    (247, 251, 255),
    (198, 219, 239),
    (107, 174, 214),
    (33, 113, 181),
    (8, 48, 107),
]


def _color(t):
    t = min(max(float(t), 0.0), 1.0) * (len(_RAMP) - 1)
    k = min(int(t), len(_RAMP) - 2)
    f = t - k
    rgb = [round(a + (b - a) * f) for a, b in zip(_RAMP[k], _RAMP[k + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _num(x):
    return f"{x:.2f}".rstrip("0").rstrip(".")


def heatmap_svg(matrix, title="Dissimilarity matrix"):
    labels = matrix.labels
    v = matrix.values
    n = len(labels)
    cell = max(2.0, min(20.0, 640.0 / max(n, 1)))
    margin_l, margin_t, legend_w = 60.0, 40.0, 80.0
    size = cell * n
    width = margin_l + size + legend_w
    height = margin_t + size + 50.0
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    tick_every = max(1, int(np.ceil(n / 15)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}" font-family="sans-serif" font-size="10">',
        f'<text x="{_num(margin_l)}" y="20" font-size="14">{escape(title)} ({n}×{n})</text>',
    ]
    for i in range(n):
        for j in range(n):
            out.append(
                f'<rect x="{_num(margin_l + j * cell)}" y="{_num(margin_t + i * cell)}" '
                f'width="{_num(cell)}" height="{_num(cell)}" fill="{_color((v[i, j] - lo) / span)}"/>'
            )
    for k in range(0, n, tick_every):
        c = _num(margin_t + (k + 0.5) * cell)
        out.append(f'<text x="{_num(margin_l - 4)}" y="{c}" text-anchor="end" dominant-baseline="middle">{labels[k]}</text>')
        x = _num(margin_l + (k + 0.5) * cell)
        y = _num(margin_t + size + 12)
        out.append(f'<text x="{x}" y="{y}" text-anchor="end" transform="rotate(-60 {x} {y})">{labels[k]}</text>')
    # colour bar
    bx = margin_l + size + 20
    for s in range(50):
        out.append(
            f'<rect x="{_num(bx)}" y="{_num(margin_t + size * (49 - s) / 50)}" width="14" '
            f'height="{_num(size / 50 + 0.5)}" fill="{_color(s / 49)}"/>'
        )
    out.append(f'<text x="{_num(bx + 18)}" y="{_num(margin_t + 8)}">{hi:.3g}</text>')
    out.append(f'<text x="{_num(bx + 18)}" y="{_num(margin_t + size)}">{lo:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def alignment_svg(a, b, path, label_a="A", label_b="B", max_links=400):
    """Two series drawn one above the other with lines joining aligned days.

    Links are drawn for aligned pairs where at least one day is wet, thinned
    to at most ``max_links``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = max(len(a), len(b))
    width, plot_h, gap, left = 900.0, 120.0, 80.0, 50.0
    xs = (width - left - 20) / max(n - 1, 1)
    top = 40.0
    base_a = top + plot_h
    base_b = base_a + gap
    peak = max(float(a.max()), float(b.max()), 1e-12)
    height = base_b + plot_h + 30

    def bars(series, base, up):
        parts = []
        for t, val in enumerate(series):
            if val <= 0:
                continue
            h = plot_h * val / peak
            y0 = base - h if up else base
            parts.append(f'<rect x="{_num(left + t * xs - xs / 2)}" y="{_num(y0)}" width="{_num(max(xs, 0.6))}" height="{_num(h)}"/>')
        return parts

    steps = path.steps if hasattr(path, "steps") else np.asarray(path)
    wet = [(int(i), int(j)) for i, j in steps if a[i] > 0 or b[j] > 0]
    stride = max(1, int(np.ceil(len(wet) / max_links)))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}" font-family="sans-serif" font-size="11">',
        f'<text x="{_num(left)}" y="20" font-size="14">Alignment {escape(str(label_a))} / {escape(str(label_b))}'
        f" (max offset {int(np.max(np.abs(steps[:, 0] - steps[:, 1])))} days)</text>",
        '<g stroke="#999999" stroke-width="0.5" stroke-opacity="0.6">',
    ]
    for i, j in wet[::stride]:
        out.append(f'<line x1="{_num(left + i * xs)}" y1="{_num(base_a)}" x2="{_num(left + j * xs)}" y2="{_num(base_b)}"/>')
    out.append("</g>")
    out.append('<g fill="#2171b5">')
    out.extend(bars(a, base_a, True))
    out.append('</g><g fill="#cb181d">')
    out.extend(bars(b, base_b, False))
    out.append("</g>")
    out.append(f'<text x="4" y="{_num(base_a - 4)}">{escape(str(label_a))}</text>')
    out.append(f'<text x="4" y="{_num(base_b + 14)}">{escape(str(label_b))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
