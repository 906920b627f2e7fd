"""Dependency-free SVG rendering of step curves.

Output is byte-deterministic: fixed viewBox, coordinates rounded to three
decimals with ``%``-formatting (always a ``.`` decimal point).
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .adjust import AdjustedSurv
from .errors import DomainError

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60.0, 150.0, 20.0, 50.0
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f")


def _num(v: float) -> str:
    return "%.3f" % v


def _label(v: float) -> str:
    return format(float(v), ".6g")


class _Frame:
    def __init__(self, x_max: float, y_min: float, y_max: float) -> None:
        self.x_max = x_max if x_max > 0 else 1.0
        self.y_min, self.y_max = y_min, y_max if y_max > y_min else y_min + 1.0
        self.w = WIDTH - LEFT - RIGHT
        self.h = HEIGHT - TOP - BOTTOM

    def x(self, t: float) -> float:
        return LEFT + self.w * t / self.x_max

    def y(self, v: float) -> float:
        return TOP + self.h * (self.y_max - v) / (self.y_max - self.y_min)


def _step_points(times, values, start_value: float, x_end: float) -> list[tuple[float, float]]:
    pts = [(0.0, start_value)]
    prev = start_value
    for t, v in zip(times, values):
        pts.append((t, prev))
        pts.append((t, v))
        prev = v
    pts.append((max(x_end, pts[-1][0]), prev))
    out = [pts[0]]
    for p in pts[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def _points_attr(frame: _Frame, pts) -> str:
    return " ".join(f"{_num(frame.x(t))},{_num(frame.y(v))}" for t, v in pts)


def _axes(frame: _Frame, x_title: str, y_title: str, y_ticks) -> list[str]:
    x0, x1 = frame.x(0.0), frame.x(frame.x_max)
    yb, yt = frame.y(frame.y_min), frame.y(frame.y_max)
    out = [f'<g class="axes" stroke="#000000" stroke-width="1">',
           f'<line x1="{_num(x0)}" y1="{_num(yb)}" x2="{_num(x1)}" y2="{_num(yb)}"/>',
           f'<line x1="{_num(x0)}" y1="{_num(yb)}" x2="{_num(x0)}" y2="{_num(yt)}"/>']
    for i in range(5):
        t = frame.x_max * i / 4
        out.append(f'<line x1="{_num(frame.x(t))}" y1="{_num(yb)}" x2="{_num(frame.x(t))}" '
                   f'y2="{_num(yb + 5)}"/>')
    for v in y_ticks:
        out.append(f'<line x1="{_num(x0 - 5)}" y1="{_num(frame.y(v))}" x2="{_num(x0)}" '
                   f'y2="{_num(frame.y(v))}"/>')
    out.append("</g>")
    out.append('<g class="labels" font-family="sans-serif" font-size="11" fill="#000000">')
    for i in range(5):
        t = frame.x_max * i / 4
        out.append(f'<text x="{_num(frame.x(t))}" y="{_num(yb + 18)}" '
                   f'text-anchor="middle">{_label(t)}</text>')
    for v in y_ticks:
        out.append(f'<text x="{_num(x0 - 8)}" y="{_num(frame.y(v) + 4)}" '
                   f'text-anchor="end">{_label(v)}</text>')
    out.append(f'<text x="{_num((x0 + x1) / 2)}" y="{_num(HEIGHT - 10)}" '
               f'text-anchor="middle">{escape(x_title)}</text>')
    out.append(f'<text x="15" y="{_num((yb + yt) / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 15 {_num((yb + yt) / 2)})">{escape(y_title)}</text>')
    out.append("</g>")
    return out


def _legend(groups: Sequence[str]) -> list[str]:
    x = WIDTH - RIGHT + 15
    out = ['<g class="legend" font-family="sans-serif" font-size="11" fill="#000000">']
    for i, g in enumerate(groups):
        y = TOP + 10 + 18 * i
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<line x1="{_num(x)}" y1="{_num(y)}" x2="{_num(x + 20)}" y2="{_num(y)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_num(x + 26)}" y="{_num(y + 4)}">{escape(str(g))}</text>')
    out.append("</g>")
    return out


def _ribbon(frame: _Frame, times, lower, upper, start_value: float, x_end: float,
            color: str) -> str:
    up = _step_points(times, upper, start_value, x_end)
    lo = _step_points(times, lower, start_value, x_end)
    pts = _points_attr(frame, up + lo[::-1])
    return f'<polygon class="ci" points="{pts}" fill="{color}" fill-opacity="0.2" stroke="none"/>'


def _document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    bg = f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>'
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head, bg, *body, "</svg>"]) + "\n"


def render_svg(adj: AdjustedSurv, conf_int: bool = False, cif: bool = False,
               censor_times: Optional[Mapping[str, Sequence[float]]] = None,
               median_lines: bool = False) -> str:
    """Draw one right-continuous step curve per group.

    Parameters
    ----------
    adj : AdjustedSurv
    conf_int : bool
        Shade point-wise bands where the curves carry them.
    cif : bool
        Plot ``1 - S`` instead of ``S``.
    censor_times : mapping of group to times, optional
        Draw a short vertical tick on the curve at each censored time.
    median_lines : bool
        Draw guides from the y-axis at 0.5 to each reached median.
    """
    if not adj.curves:
        raise DomainError("nothing to plot")
    x_max = max(float(max(c.support_end, c.times[-1] if len(c.times) else 0.0))
                for c in adj.curves.values())
    frame = _Frame(x_max, 0.0, 1.0)
    tf = (lambda v: 1.0 - np.asarray(v, dtype=float)) if cif else (
        lambda v: np.asarray(v, dtype=float))
    start = 0.0 if cif else 1.0

    body = _axes(frame, "Time", "Cumulative incidence" if cif else "Survival probability",
                 (0.0, 0.25, 0.5, 0.75, 1.0))
    ribbons, lines, ticks, guides = [], [], [], []
    for i, (g, c) in enumerate(adj.curves.items()):
        color = PALETTE[i % len(PALETTE)]
        end = float(c.support_end)
        vals = tf(c.surv)
        if conf_int and c.ci_lower is not None and c.ci_upper is not None:
            lo, hi = tf(c.ci_lower), tf(c.ci_upper)
            if cif:
                lo, hi = hi, lo
            ribbons.append(_ribbon(frame, c.times, lo, hi, start, end, color))
        pts = _step_points(c.times, vals, start, end)
        lines.append(f'<polyline class="curve" points="{_points_attr(frame, pts)}" '
                     f'fill="none" stroke={quoteattr(color)} stroke-width="2"/>')
        if censor_times is not None and g in censor_times:
            for t in sorted(set(float(x) for x in censor_times[g] if x <= end)):
                v = float(tf(c.curve(t)))
                ticks.append(f'<line class="censor" x1="{_num(frame.x(t))}" '
                             f'y1="{_num(frame.y(v) - 4)}" x2="{_num(frame.x(t))}" '
                             f'y2="{_num(frame.y(v) + 4)}" stroke="{color}" stroke-width="1"/>')
        if median_lines:
            hit = np.flatnonzero(c.surv <= 0.5)
            if hit.size:
                q = float(c.times[hit[0]])
                y = frame.y(0.5)
                guides.append(f'<line class="median" x1="{_num(frame.x(0.0))}" y1="{_num(y)}" '
                              f'x2="{_num(frame.x(q))}" y2="{_num(y)}" stroke="#808080" '
                              f'stroke-dasharray="4 3"/>')
                guides.append(f'<line class="median" x1="{_num(frame.x(q))}" y1="{_num(y)}" '
                              f'x2="{_num(frame.x(q))}" y2="{_num(frame.y(0.0))}" '
                              f'stroke="#808080" stroke-dasharray="4 3"/>')
    body += ribbons + guides + lines + ticks + _legend(adj.groups)
    return _document(body)


def render_diff_svg(estimates: Sequence, conf_int: bool = True) -> str:
    """Draw a difference curve over time with its point-wise band."""
    if not estimates:
        raise DomainError("nothing to plot")
    t = np.array([e.at for e in estimates], dtype=float)
    d = np.array([e.estimate for e in estimates], dtype=float)
    lo = np.array([e.ci_lower for e in estimates], dtype=float)
    hi = np.array([e.ci_upper for e in estimates], dtype=float)
    bounds = np.concatenate([d, lo, hi, [0.0]]) if conf_int else np.concatenate([d, [0.0]])
    bounds = bounds[np.isfinite(bounds)]
    y_min, y_max = float(bounds.min()), float(bounds.max())
    pad = 0.05 * (y_max - y_min) if y_max > y_min else 0.5
    frame = _Frame(float(t.max()), y_min - pad, y_max + pad)
    ticks = tuple(np.linspace(frame.y_min, frame.y_max, 5))
    a, b = estimates[0].group_a, estimates[0].group_b
    body = _axes(frame, "Time", f"Difference {a} - {b}", ticks)
    # the difference of two curves is 0 before the first grid point
    if conf_int:
        body.append(_ribbon(frame, t, lo, hi, 0.0, float(t.max()), PALETTE[0]))
    zero = frame.y(0.0)
    body.append(f'<line class="zero" x1="{_num(frame.x(0.0))}" y1="{_num(zero)}" '
                f'x2="{_num(frame.x(frame.x_max))}" y2="{_num(zero)}" stroke="#808080" '
                f'stroke-dasharray="4 3"/>')
    pts = _step_points(t, d, 0.0, float(t.max()))
    body.append(f'<polyline class="curve" points="{_points_attr(frame, pts)}" fill="none" '
                f'stroke="{PALETTE[0]}" stroke-width="2"/>')
    return _document(body)
