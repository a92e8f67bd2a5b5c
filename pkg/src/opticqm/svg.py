"""Deterministic SVG 1.1 rendering of nodal polylines and curve projections."""
from __future__ import annotations

from pathlib import Path

import numpy as np

DEFAULT_STYLE = {"stroke": "#1f3a93", "stroke_width": 0.006, "outline": "#000000",
                 "outline_width": 0.01, "margin": 0.05, "pixels": 480, "digits": 4}


def _num(v, digits):
    s = f"{float(v):.{digits}f}"
    return "0" if s.strip("-0.") == "" else s


def domain_outline(domain: str, a=1.0, b=1.0, R=1.0, r=0.5):
    """Outline shapes in domain units: ``('rect', x0, y0, x1, y1)`` or ``('circle', cx, cy, rad)``."""
    if domain in ("square", "rectangle", "torus"):
        w, h = (1.0, 1.0) if domain == "square" else (a, b)
        return [("rect", 0.0, 0.0, w, h)]
    if domain == "disk":
        return [("circle", 0.0, 0.0, R)]
    if domain == "annulus":
        return [("circle", 0.0, 0.0, R), ("circle", 0.0, 0.0, r)]
    raise ValueError(f"no outline for domain {domain!r}")


def _bounds(outline, lines):
    lo = np.array([np.inf, np.inf])
    hi = -lo
    for shape in outline:
        if shape[0] == "rect":
            lo = np.minimum(lo, shape[1:3])
            hi = np.maximum(hi, shape[3:5])
        else:
            c = np.array(shape[1:3])
            lo = np.minimum(lo, c - shape[3])
            hi = np.maximum(hi, c + shape[3])
    for p in lines:
        if len(p):
            lo = np.minimum(lo, p.min(axis=0))
            hi = np.maximum(hi, p.max(axis=0))
    if not np.all(np.isfinite(lo)):
        lo, hi = np.zeros(2), np.ones(2)
    return lo, hi


def render_svg(polylines, closed=None, outline=(), style=None) -> str:
    """SVG text with one ``path`` per polyline; y points up (flipped in a group transform)."""
    st = dict(DEFAULT_STYLE)
    st.update(style or {})
    d = int(st["digits"])
    lines = [np.asarray(p, dtype=float)[:, :2] for p in polylines]
    closed = [False] * len(lines) if closed is None else list(closed)
    lo, hi = _bounds(outline, lines)
    span = hi - lo
    m = st["margin"] * max(span.max(), 1e-12)
    x0, y0 = lo - m
    w, h = span + 2 * m
    px = int(st["pixels"])
    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{px}" height="{int(round(px * h / w))}" '
           f'viewBox="{_num(x0, d)} {_num(-(y0 + h), d)} {_num(w, d)} {_num(h, d)}">',
           '<g transform="scale(1,-1)" fill="none">']
    for shape in outline:
        if shape[0] == "rect":
            _, a0, b0, a1, b1 = shape
            out.append(f'<rect class="outline" x="{_num(a0, d)}" y="{_num(b0, d)}" '
                       f'width="{_num(a1 - a0, d)}" height="{_num(b1 - b0, d)}" '
                       f'stroke="{st["outline"]}" stroke-width="{_num(st["outline_width"], d)}"/>')
        else:
            _, cx, cy, rad = shape
            out.append(f'<circle class="outline" cx="{_num(cx, d)}" cy="{_num(cy, d)}" r="{_num(rad, d)}" '
                       f'stroke="{st["outline"]}" stroke-width="{_num(st["outline_width"], d)}"/>')
    for p, c in zip(lines, closed):
        if len(p) == 0:
            continue
        pts = " L ".join(f"{_num(x, d)},{_num(y, d)}" for x, y in p)
        out.append(f'<path class="nodal" d="M {pts}{" Z" if c else ""}" '
                   f'stroke="{st["stroke"]}" stroke-width="{_num(st["stroke_width"], d)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(path, polylines, closed=None, outline=(), style=None) -> Path:
    """Write :func:`render_svg` output to ``path`` (bytes depend only on the inputs)."""
    p = Path(path)
    p.write_bytes(render_svg(polylines, closed, outline, style).encode("utf-8"))
    return p
