"""SVG 1.1 drawings of planar frameworks.

Bars are solid lines, cables dashed lines, struts a pair of parallel lines.
A witness configuration can be overlaid in a second colour.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .model import MemberKind, TensegrityFramework


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderStyle:
    scale: float = 60.0
    margin: float = 30.0
    stroke: float = 2.0
    node_radius: float = 4.0
    strut_gap: float = 3.0
    dash: str = "6,4"
    color: str = "#000000"
    overlay_color: str = "#d62728"
    font_size: float = 12.0


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _member(kind, a, b, style, color, cls):
    (x1, y1), (x2, y2) = a, b
    common = f'stroke="{color}" stroke-width="{_fmt(style.stroke)}"'
    if kind is MemberKind.BAR:
        return [f'<line class="{cls} bar" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" {common}/>']
    if kind is MemberKind.CABLE:
        return [
            f'<line class="{cls} cable" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'{common} stroke-dasharray="{style.dash}"/>'
        ]
    d = np.array([x2 - x1, y2 - y1])
    L = np.linalg.norm(d)
    nrm = np.array([-d[1], d[0]]) / L * style.strut_gap / 2 if L > 0 else np.zeros(2)
    out = [f'<g class="{cls} strut">']
    for s in (1, -1):
        o = s * nrm
        out.append(
            f'<line x1="{_fmt(x1 + o[0])}" y1="{_fmt(y1 + o[1])}" x2="{_fmt(x2 + o[0])}" y2="{_fmt(y2 + o[1])}" {common}/>'
        )
    out.append("</g>")
    return out


def render_svg(fw: TensegrityFramework, witness=None, style: RenderStyle = RenderStyle()) -> str:
    """SVG text for a planar framework, optionally with ``witness`` (n x 2) overlaid."""
    if fw.r != 2:
        raise RenderError("render supports planar frameworks only")
    P = fw.original_P
    layers = [P]
    if witness is not None:
        Q = np.asarray(witness, dtype=float)
        if Q.shape != P.shape:
            raise RenderError(f"witness must be {P.shape[0]} x 2, got {Q.shape}")
        # witnesses are stored relative to the centroid
        Q = Q - Q.mean(axis=0) + P.mean(axis=0)
        layers.append(Q)
    allpts = np.vstack(layers)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    w = (hi[0] - lo[0]) * style.scale + 2 * style.margin
    h = (hi[1] - lo[1]) * style.scale + 2 * style.margin

    def to_px(X):
        # flip y so the drawing reads like a plot
        return np.column_stack([
            (X[:, 0] - lo[0]) * style.scale + style.margin,
            (hi[1] - X[:, 1]) * style.scale + style.margin,
        ])

    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(w)}" height="{_fmt(h)}" viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    for layer, (X, color, cls) in enumerate(
        zip(layers, (style.color, style.overlay_color), ("framework", "witness"))
    ):
        px = to_px(X)
        lines.append(f'<g id="{cls}" fill="none">')
        for e in fw.edges:
            lines.extend(_member(e.kind, px[e.i], px[e.j], style, color, cls))
        lines.append("</g>")
        lines.append(f'<g id="{cls}-nodes" fill="{color}">')
        for k, (x, y) in enumerate(px):
            lines.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(style.node_radius)}"/>')
            if layer == 0:
                lines.append(
                    f'<text x="{_fmt(x + style.node_radius + 2)}" y="{_fmt(y - style.node_radius - 2)}" '
                    f'font-family="sans-serif" font-size="{_fmt(style.font_size)}">{escape(str(k + 1))}</text>'
                )
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
