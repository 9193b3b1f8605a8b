"""Minimal SVG emitter for overhead trajectory plots.

Hand-rolled polylines and circles, no plotting dependency: zones are
shaded green discs (solid core, dashed inflated boundary), sheep tracks
are red, dog tracks blue, the goal a gold marker. Start points are
hollow, end points filled.
"""

from __future__ import annotations

import numpy as np

SHEEP_COLOR = "#c0392b"
DOG_COLOR = "#2471a3"
ZONE_COLOR = "#27ae60"
GOAL_COLOR = "#b7950b"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class _Mapper:
    """World-to-viewport transform with a uniform scale and y flip."""

    def __init__(self, lo, hi, width, height, pad):
        span = np.maximum(hi - lo, 1e-6)
        self.scale = min((width - 2 * pad) / span[0], (height - 2 * pad) / span[1])
        self.lo = lo
        self.pad = pad
        self.height = height

    def pt(self, xy) -> tuple[float, float]:
        x = self.pad + (xy[0] - self.lo[0]) * self.scale
        y = self.height - (self.pad + (xy[1] - self.lo[1]) * self.scale)
        return x, y

    def len(self, r: float) -> float:
        return r * self.scale


def _polyline(mapper, track, color, width=1.6) -> str:
    pts = " ".join(",".join(_fmt(c) for c in mapper.pt(p)) for p in track)
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}"/>'
    )


def _marker(mapper, xy, color, filled: bool) -> str:
    x, y = mapper.pt(xy)
    fill = color if filled else "white"
    return (
        f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="{fill}" '
        f'stroke="{color}" stroke-width="1.2"/>'
    )


def episode_svg(log, zones, goal=None, width: int = 640, height: int = 480) -> str:
    """Render an episode log as a standalone SVG document string."""
    pts = [log.sheep.reshape(-1, 2)]
    if log.dogs.size:
        pts.append(log.dogs.reshape(-1, 2))
    for z in zones:
        c, r = np.asarray(z.center), z.inflated_radius
        pts.append(np.array([c - r, c + r]))
    if goal is not None:
        pts.append(np.asarray(goal, dtype=float).reshape(1, 2))
    allpts = np.vstack(pts)
    mapper = _Mapper(allpts.min(axis=0), allpts.max(axis=0), width, height, pad=24)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for z in zones:
        cx, cy = mapper.pt(z.center)
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(mapper.len(z.radius))}" '
            f'fill="{ZONE_COLOR}" fill-opacity="0.35" stroke="{ZONE_COLOR}"/>'
        )
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
            f'r="{_fmt(mapper.len(z.inflated_radius))}" fill="none" '
            f'stroke="{ZONE_COLOR}" stroke-dasharray="5,4"/>'
        )
    if goal is not None:
        gx, gy = mapper.pt(np.asarray(goal, dtype=float))
        parts.append(
            f'<circle cx="{_fmt(gx)}" cy="{_fmt(gy)}" r="5" fill="{GOAL_COLOR}"/>'
        )
    for i in range(log.sheep.shape[1]):
        track = log.sheep[:, i]
        parts.append(_polyline(mapper, track, SHEEP_COLOR))
        parts.append(_marker(mapper, track[0], SHEEP_COLOR, filled=False))
        parts.append(_marker(mapper, track[-1], SHEEP_COLOR, filled=True))
    for k in range(log.dogs.shape[1]):
        track = log.dogs[:, k]
        parts.append(_polyline(mapper, track, DOG_COLOR))
        parts.append(_marker(mapper, track[0], DOG_COLOR, filled=False))
        parts.append(_marker(mapper, track[-1], DOG_COLOR, filled=True))
    parts.append("</svg>")
    return "\n".join(parts)
