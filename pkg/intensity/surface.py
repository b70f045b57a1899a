from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from pattern.geometry import RectWindow
from utils.errors import DataError, NumericError

INTENSITY_FLOOR = 1e-8  # points per m², lower clamp applied at evaluation


def linear_stencil(f: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lower index, upper index and weight of linear interpolation at fractional
    centre positions `f`, holding the border value beyond the first and last centre."""
    f = np.asarray(f, dtype=float)
    if n == 1:
        zero = np.zeros(f.shape, dtype=int)
        return zero, zero, np.zeros(f.shape)
    f = np.clip(f, 0.0, n - 1)
    i0 = np.minimum(np.floor(f).astype(int), n - 2)
    return i0, i0 + 1, f - i0


@dataclass(frozen=True, eq=False)
class IntensitySurface:
    """
    Gridded intensity (points per m²) on a rectangular window.

    `values[i, j]` belongs to the cell whose centre is
    (x_min + (i + 0.5) dx, y_min + (j + 0.5) dy). Evaluation between centres is
    bilinear; outside the centre lattice the border value is held constant.
    A rolled surface remembers its cell offset and evaluates a point through
    its pre-image, so every point keeps the value it had before the shift.
    """

    window: RectWindow
    values: np.ndarray
    floor: float = INTENSITY_FLOOR
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or min(values.shape) < 1:
            raise NumericError(f"intensity grid must be a nonempty 2-D array, got shape {values.shape}")
        if not np.isfinite(values).all() or (values < 0).any():
            raise NumericError("intensity values must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        nx, ny = values.shape
        object.__setattr__(self, "offset", (int(self.offset[0]) % nx, int(self.offset[1]) % ny))

    @classmethod
    def constant(cls, window: RectWindow, value: float, nx: int = 2, ny: int = 2, **kw) -> "IntensitySurface":
        return cls(window, np.full((nx, ny), float(value)), **kw)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def periodic(self) -> bool:
        return self.offset != (0, 0)

    @property
    def dx(self) -> float:
        return self.window.width / self.values.shape[0]

    @property
    def dy(self) -> float:
        return self.window.height / self.values.shape[1]

    def cell_centres(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        xs = self.window.x_min + (np.arange(nx) + 0.5) * self.dx
        ys = self.window.y_min + (np.arange(ny) + 0.5) * self.dy
        return xs, ys

    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.dx * self.dy)

    def max(self) -> float:
        return float(self.values.max())

    def scaled(self, factor: float) -> "IntensitySurface":
        return replace(self, values=self.values * factor)

    def roll(self, kx: int, ky: int) -> "IntensitySurface":
        """Cyclic shift by whole cells: the value at cell i moves to cell i + kx."""
        ox, oy = self.offset
        return replace(self, values=np.roll(self.values, (kx, ky), axis=(0, 1)), offset=(ox + kx, oy + ky))

    def evaluate(self, q) -> np.ndarray | float:
        scalar = np.ndim(q) == 1
        xy = np.atleast_2d(np.asarray(q, dtype=float))
        if xy.size == 0:
            return np.empty(0)
        if not self.window.contains(xy).all():
            raise DataError("out of window: intensity evaluated outside its window")

        nx, ny = self.shape
        ox, oy = self.offset
        gx = (xy[:, 0] - self.window.x_min) / self.dx - ox
        gy = (xy[:, 1] - self.window.y_min) / self.dy - oy
        if self.periodic:
            # back to the unshifted frame; rounding below zero is not a wrap
            gx = np.where(gx < -1e-9, gx + nx, gx)
            gy = np.where(gy < -1e-9, gy + ny, gy)
            v = np.roll(self.values, (-ox, -oy), axis=(0, 1))
        else:
            v = self.values
        i0, i1, tx = linear_stencil(gx - 0.5, nx)
        j0, j1, ty = linear_stencil(gy - 0.5, ny)

        v00, v10, v01, v11 = v[i0, j0], v[i1, j0], v[i0, j1], v[i1, j1]
        # this form returns a constant grid's value exactly
        out = v00 + tx * (v10 - v00) + ty * (v01 - v00) + tx * ty * (v11 - v10 - v01 + v00)
        out = np.maximum(out, self.floor)
        return float(out[0]) if scalar else out

    def to_frame(self) -> pd.DataFrame:
        xs, ys = self.cell_centres()
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return pd.DataFrame({"x": gx.ravel(), "y": gy.ravel(), "lambda": self.values.ravel()})


def rescale_to_count(s: IntensitySurface, n_target: int) -> IntensitySurface:
    """Scale the surface so that it predicts `n_target` points in the window."""
    mass = s.total_mass()
    if not mass > 0:
        raise NumericError("cannot rescale: intensity surface has zero mass")
    if n_target <= 0:
        raise NumericError(f"cannot rescale: target count must be positive, got {n_target}")
    return s.scaled(n_target / mass)


def write_surface(s: IntensitySurface, path: str | Path) -> Path:
    from utils.run_artifacts import write_frame

    return write_frame(s.to_frame(), path)


def read_surface(path: str | Path, window: RectWindow | None = None, floor: float = INTENSITY_FLOOR) -> IntensitySurface:
    """Rebuild a surface from an `x,y,lambda` grid file; the window is inferred from the centres if not given."""
    df = pd.read_csv(path)
    missing = {"x", "y", "lambda"} - set(df.columns)
    if missing:
        raise DataError(f"schema error: surface file {path} lacks columns {sorted(missing)}")
    xs = np.unique(df["x"].to_numpy())
    ys = np.unique(df["y"].to_numpy())
    if len(xs) * len(ys) != len(df):
        raise DataError(f"schema error: surface file {path} is not a full grid")
    df = df.sort_values(["x", "y"], kind="mergesort")
    values = df["lambda"].to_numpy().reshape(len(xs), len(ys))
    if window is None:
        if len(xs) < 2 or len(ys) < 2:
            raise DataError("schema error: window must be given for a single-row grid")
        dx, dy = (xs[-1] - xs[0]) / (len(xs) - 1), (ys[-1] - ys[0]) / (len(ys) - 1)
        window = RectWindow(xs[0] - dx / 2, ys[0] - dy / 2, xs[-1] + dx / 2, ys[-1] + dy / 2)
    return IntensitySurface(window, values, floor=floor)
