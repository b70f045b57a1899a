from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from utils.errors import NumericError, WindowError


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class RectWindow:
    """Axis-aligned observation rectangle, coordinates in metres."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(np.isfinite(c) for c in coords):
            raise WindowError(f"window coordinates must be finite: {coords}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise WindowError(f"empty window: {coords}")

    @classmethod
    def from_bbox(cls, bbox) -> "RectWindow":
        x_min, y_min, x_max, y_max = (float(v) for v in bbox)
        return cls(x_min, y_min, x_max, y_max)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def sides(self) -> np.ndarray:
        return np.array([self.width, self.height])

    @property
    def origin(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min])

    def area(self) -> float:
        return self.width * self.height

    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def contains(self, xy) -> np.ndarray:
        """Boolean mask of points inside the closed rectangle."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        in_x = (self.x_min <= xy[:, 0]) & (xy[:, 0] <= self.x_max)
        in_y = (self.y_min <= xy[:, 1]) & (xy[:, 1] <= self.y_max)
        return in_x & in_y

    def erode(self, r: float) -> "RectWindow":
        return erode(self, r)

    def dilate(self, r: float) -> "RectWindow":
        return dilate(self, r)


def erode(w: RectWindow, r: float) -> RectWindow:
    """Minus-sampling window [x_min+r, x_max-r] x [y_min+r, y_max-r]."""
    if r < 0:
        raise NumericError(f"erosion radius must be nonnegative, got {r}")
    if 2 * r >= min(w.width, w.height):
        raise WindowError(f"erosion empty: r={r} for window {w.bbox()}")
    return RectWindow(w.x_min + r, w.y_min + r, w.x_max - r, w.y_max - r)


def dilate(w: RectWindow, r: float) -> RectWindow:
    if r < 0:
        raise NumericError(f"dilation radius must be nonnegative, got {r}")
    return RectWindow(w.x_min - r, w.y_min - r, w.x_max + r, w.y_max + r)


def border_distance(w: RectWindow, xy) -> np.ndarray:
    """Distance of each point to the window boundary; x is in erode(w, r) iff this is >= r."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    if xy.size == 0:
        return np.empty(0)
    return np.minimum.reduce([
        xy[:, 0] - w.x_min,
        w.x_max - xy[:, 0],
        xy[:, 1] - w.y_min,
        w.y_max - xy[:, 1],
    ])


def translation_weights(w: RectWindow, dx, dy) -> np.ndarray:
    """|W| / |W ∩ (W + (dx, dy))| for arrays of pair differences."""
    adx = np.abs(np.asarray(dx, dtype=float))
    ady = np.abs(np.asarray(dy, dtype=float))
    a, b = w.width, w.height
    if np.any(adx >= a) or np.any(ady >= b):
        raise NumericError("degenerate overlap: pair difference reaches a window side")
    return (a * b) / ((a - adx) * (b - ady))


def translation_weight(w: RectWindow, p: Point, q: Point) -> float:
    mask = w.contains([p, q])
    assert mask.all(), "translation weight needs both points inside the window"
    return float(translation_weights(w, p[0] - q[0], p[1] - q[1]))


def torus_shift(points, shift, w: RectWindow) -> np.ndarray:
    """Translate points by `shift` and wrap each coordinate back into the window.

    A coordinate whose shift is a whole number of sides is returned unchanged, so
    points on the closed upper edges stay put under the identity shift.
    """
    xy = np.asarray(points, dtype=float).reshape(-1, 2)
    s = np.asarray(shift, dtype=float)
    moved = np.mod(s, w.sides) != 0
    wrapped = np.mod(xy - w.origin + s, w.sides) + w.origin
    return np.where(moved, wrapped, xy)


def torus_difference(w: RectWindow, dx, dy) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-image differences on the torus obtained by gluing opposite sides."""
    dx = np.abs(np.asarray(dx, dtype=float))
    dy = np.abs(np.asarray(dy, dtype=float))
    return np.minimum(dx, w.width - dx), np.minimum(dy, w.height - dy)
