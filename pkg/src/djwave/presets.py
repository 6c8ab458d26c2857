"""Shipped background currents.

Shapes are given relative to the surface value and rescaled so that
g d^3 = (int U*)^2; the profile quantities are always rebuilt from them.
"""

from __future__ import annotations

import math

from .background import BackgroundCurrent

DEPTH = 1.0
GRAVITY = 9.81

SHAPES = {
    "irrotational": ((-1.0, 1.0), (0.0, 1.0)),
    # one vorticity jump at mid-depth
    "two-layer": ((-1.0, 0.8), (-0.5, 1.2), (0.0, 1.0)),
    # two jumps, at one and two thirds of the depth
    "three-layer": ((-1.0, 1.0), (-2.0 / 3.0, 1.3), (-1.0 / 3.0, 0.9), (0.0, 1.1)),
}


def current_from_shape(points, depth: float = DEPTH, gravity: float = GRAVITY,
                       speed: float | None = None) -> BackgroundCurrent:
    """Scale a breakpoint shape (y/d, relative U*) to the standard normalization."""
    y = [depth * p[0] for p in points]
    raw = [p[1] for p in points]
    flux = sum(0.5 * (raw[k] + raw[k + 1]) * (y[k + 1] - y[k]) for k in range(len(y) - 1))
    scale = math.sqrt(gravity * depth ** 3) / flux
    if speed is None:
        speed = math.sqrt(gravity * depth)
    return BackgroundCurrent(depth=depth, gravity=gravity, speed=speed,
                             y=y, u=[scale * v for v in raw])


def preset(name: str) -> BackgroundCurrent:
    try:
        return current_from_shape(SHAPES[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(SHAPES)}") from None
