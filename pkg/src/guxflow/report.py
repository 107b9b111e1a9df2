"""Static report emitters: experience-curve SVG, trajectory SVG, affect heat map.

SVG is assembled from plain strings so identical inputs always produce
identical bytes.
"""

import csv

import numpy as np

from .labeler import AFFECTS

DEFAULT_COLORS = {2: "#1f3b73", 1: "#5b8ac5", 0: "#cfe0f2"}

_STATE_NAMES = {0: "average (0)", 1: "good (1)", 2: "best (2)"}


def _fmt(v):
    return f"{float(v):.3f}".rstrip("0").rstrip(".")


def _legend(colors, x, y):
    parts = []
    for i, state in enumerate((2, 1, 0)):
        yy = y + 18 * i
        parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(yy)}" width="12" height="12" '
                     f'fill="{colors[state]}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(x + 18)}" y="{_fmt(yy + 10)}" font-size="11" '
                     f'font-family="sans-serif">{_STATE_NAMES[state]}</text>')
    return parts


def render_experience_curve(t, states, colors=None, width=900, height=260):
    """Step curve of the per-second state with a color band underneath.

    The legend always lists all three states, whatever the session contains.
    """
    colors = colors or DEFAULT_COLORS
    t = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=int)
    if len(t) != len(states) or len(t) == 0:
        raise ValueError("t and states must be non-empty and equally long")

    left, right, top, bottom = 50.0, 120.0, 20.0, 60.0
    plot_w = width - left - right
    plot_h = height - top - bottom
    t0, t1 = t.min(), t.max()
    span = (t1 - t0) if t1 > t0 else 1.0
    step = span / max(1, len(t) - 1)

    def sx(v):
        return left + (v - t0) / span * plot_w

    def sy(state):
        return top + (2 - state) / 2.0 * (plot_h - 24.0)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']

    band_y = top + plot_h - 16.0
    for i in range(len(t)):
        x = sx(t[i])
        w = max(plot_w / len(t), (sx(t[i] + step) - x))
        parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(band_y)}" width="{_fmt(w)}" '
                     f'height="14" fill="{colors[int(states[i])]}"/>')

    points = []
    for i in range(len(t)):
        y = sy(states[i])
        points.append(f"{_fmt(sx(t[i]))},{_fmt(y)}")
        if i + 1 < len(t):
            points.append(f"{_fmt(sx(t[i + 1]))},{_fmt(y)}")
    parts.append(f'<polyline points="{" ".join(points)}" fill="none" '
                 f'stroke="#22334a" stroke-width="1.5"/>')

    axis_y = top + plot_h
    parts.append(f'<line x1="{_fmt(left)}" y1="{_fmt(axis_y)}" x2="{_fmt(left + plot_w)}" '
                 f'y2="{_fmt(axis_y)}" stroke="#333"/>')
    parts.append(f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" '
                 f'y2="{_fmt(axis_y)}" stroke="#333"/>')
    for state in (0, 1, 2):
        parts.append(f'<text x="{_fmt(left - 8)}" y="{_fmt(sy(state) + 4)}" font-size="11" '
                     f'text-anchor="end" font-family="sans-serif">{state}</text>')
    for frac in (0.0, 0.5, 1.0):
        tv = t0 + frac * span
        parts.append(f'<text x="{_fmt(sx(tv))}" y="{_fmt(axis_y + 16)}" font-size="11" '
                     f'text-anchor="middle" font-family="sans-serif">{_fmt(tv)} s</text>')
    parts.extend(_legend(colors, left + plot_w + 16, top))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_trajectory(paths, timeline_t, timeline_states, colors=None, width=600, height=600):
    """Movement traces colored by the state at each segment's time.

    ``paths`` is a list of (k, 3) arrays of (t, x, y) rows; segments are
    drawn within each path only.
    """
    colors = colors or DEFAULT_COLORS
    paths = [np.asarray(p, dtype=float) for p in paths if p is not None and len(p) > 0]
    if not paths:
        raise ValueError("no trajectory points given")
    timeline_t = np.asarray(timeline_t, dtype=float)
    timeline_states = np.asarray(timeline_states, dtype=int)

    allpts = np.concatenate(paths)
    x_lo, x_hi = allpts[:, 1].min(), allpts[:, 1].max()
    y_lo, y_hi = allpts[:, 2].min(), allpts[:, 2].max()
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    pad = 30.0

    def sx(v):
        return pad + (v - x_lo) / x_span * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y_lo) / y_span * (height - 2 * pad)

    def state_at(tv):
        idx = int(np.searchsorted(timeline_t, tv, side="right")) - 1
        return int(timeline_states[min(max(idx, 0), len(timeline_states) - 1)])

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']
    for path in paths:
        for i in range(len(path) - 1):
            color = colors[state_at(path[i, 0])]
            parts.append(f'<line x1="{_fmt(sx(path[i, 1]))}" y1="{_fmt(sy(path[i, 2]))}" '
                         f'x2="{_fmt(sx(path[i + 1, 1]))}" y2="{_fmt(sy(path[i + 1, 2]))}" '
                         f'stroke="{color}" stroke-width="2"/>')
        start = path[0]
        parts.append(f'<circle cx="{_fmt(sx(start[1]))}" cy="{_fmt(sy(start[2]))}" r="3" '
                     f'fill="{colors[state_at(start[0])]}" stroke="#333"/>')
    parts.extend(_legend(colors, width - 150, 20))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_affect_heatmap_csv(timeline, path):
    """Affect-by-time flag table from a timeline read with read_timeline_csv."""
    t = timeline["t"]
    flags = timeline["affect_flags"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["affect"] + [repr(float(v)) for v in t])
        for i, affect in enumerate(AFFECTS):
            writer.writerow([affect] + [int(v) for v in flags[:, i]])
