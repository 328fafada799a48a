"""Minimal self-contained SVG charts (line overlays, bars, heat maps)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 400
PAD = dict(left=70, right=20, top=40, bottom=50)


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) * (b - a) / (hi - lo)


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def _frame(title, xlabel, ylabel, xlim, ylim, comment, log_y=False):
    sx = _scale(*xlim, PAD["left"], W - PAD["right"])
    sy = _scale(*ylim, H - PAD["bottom"], PAD["top"])
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">']
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    out.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    x0, x1 = PAD["left"], W - PAD["right"]
    y0, y1 = H - PAD["bottom"], PAD["top"]
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    for t in _ticks(*xlim):
        px = float(sx(t))
        out.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(*ylim):
        py = float(sy(t))
        label = f"1e{t:.0f}" if log_y else f"{t:.3g}"
        out.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2})">{escape(ylabel)}</text>')
    return out, sx, sy


def _limits(arrays):
    lo = min(float(np.nanmin(a)) for a in arrays)
    hi = max(float(np.nanmax(a)) for a in arrays)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(series, title="", xlabel="x", ylabel="", comment="", log_y=False):
    """``series``: list of ``(label, x, y)``; optional ``dashed`` flag as a 4th item."""
    xs = [np.asarray(s[1], dtype=float) for s in series]
    ys = [np.asarray(s[2], dtype=float) for s in series]
    if log_y:
        ys = [np.log10(np.maximum(np.abs(y), 1e-300)) for y in ys]
    xlim = (min(float(x.min()) for x in xs), max(float(x.max()) for x in xs))
    out, sx, sy = _frame(title, xlabel, ylabel, xlim, _limits(ys), comment, log_y)
    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if len(s) > 3 and s[3] else ""
        pts = " ".join(f"{float(a):.2f},{float(b):.2f}" for a, b in zip(sx(x), sy(y)) if np.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        ly = PAD["top"] + 16 + 16 * i
        out.append(f'<line x1="{W - 170}" y1="{ly - 4}" x2="{W - 150}" y2="{ly - 4}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{W - 145}" y="{ly}">{escape(str(s[0]))}</text>')
    out.append("</svg>")
    return "\n".join(out)


def bar_chart(labels, values, title="", ylabel="", comment="", log_y=True):
    vals = np.asarray(values, dtype=float)
    shown = np.log10(np.maximum(vals, 1e-300)) if log_y else vals
    lo = min(float(shown.min()), 0.0 if not log_y else float(np.floor(shown.min())))
    hi = float(np.ceil(shown.max())) if log_y else float(shown.max())
    if hi <= lo:
        hi = lo + 1.0
    n = len(labels)
    out, sx, sy = _frame(title, "", ylabel, (0, n), (lo, hi), comment, log_y)
    bw = (W - PAD["left"] - PAD["right"]) / max(n, 1)
    base = float(sy(lo))
    for i, (lab, v) in enumerate(zip(labels, shown)):
        top = float(sy(v))
        x = PAD["left"] + i * bw + 0.15 * bw
        out.append(f'<rect x="{x:.2f}" y="{min(top, base):.2f}" width="{0.7 * bw:.2f}" '
                   f'height="{abs(base - top):.2f}" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + 0.35 * bw:.2f}" y="{H - PAD["bottom"] + 32}" text-anchor="middle" '
                   f'font-size="10">{escape(str(lab))}</text>')
    out.append("</svg>")
    return "\n".join(out)


def _color(t):
    # blue -> white -> red
    t = float(np.clip(t, 0.0, 1.0))
    if t < 0.5:
        a = t / 0.5
        r, g, b = int(40 + 215 * a), int(90 + 165 * a), 255
    else:
        a = (t - 0.5) / 0.5
        r, g, b = 255, int(255 - 185 * a), int(255 - 215 * a)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(values, extent, title="", comment=""):
    """``values`` shaped (nx, ny) over ``extent`` = (x0, x1, y0, y1)."""
    v = np.asarray(values, dtype=float)
    x0, x1, y0, y1 = extent
    out, sx, sy = _frame(title, "x", "y", (x0, x1), (y0, y1), comment)
    lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
    span = hi - lo or 1.0
    nx, ny = v.shape
    dx, dy = (x1 - x0) / nx, (y1 - y0) / ny
    for i in range(nx):
        for j in range(ny):
            px0, px1 = float(sx(x0 + i * dx)), float(sx(x0 + (i + 1) * dx))
            py0, py1 = float(sy(y0 + (j + 1) * dy)), float(sy(y0 + j * dy))
            out.append(f'<rect x="{px0:.2f}" y="{py0:.2f}" width="{px1 - px0 + 0.3:.2f}" height="{py1 - py0 + 0.3:.2f}" '
                       f'fill="{_color((v[i, j] - lo) / span)}"/>')
    out.append(f'<text x="{W - PAD["right"]}" y="{PAD["top"] - 6}" text-anchor="end" font-size="10">'
               f'min {lo:.3g}  max {hi:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out)
