from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from pattern.geometry import RectWindow
from utils.errors import NumericError

DEFAULT_N_R = 512


class StatKind(str, Enum):
    K = "K"
    F = "F"
    G = "G"
    J = "J"
    K_CROSS = "K_cross"
    J_CROSS = "J_cross"

    @property
    def is_k(self) -> bool:
        return self in (StatKind.K, StatKind.K_CROSS)

    @property
    def is_j(self) -> bool:
        return self in (StatKind.J, StatKind.J_CROSS)


@dataclass(frozen=True, eq=False)
class RGrid:
    """Increasing distances in metres, starting at 0."""

    r_values: np.ndarray

    def __post_init__(self):
        r = np.array(self.r_values, dtype=float).ravel()
        if r.size == 0 or r[0] != 0.0:
            raise NumericError("r grid must start at 0")
        if np.any(np.diff(r) <= 0):
            raise NumericError("r grid must be strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "r_values", r)

    @classmethod
    def linspace(cls, r_max: float, n: int = DEFAULT_N_R) -> "RGrid":
        if not r_max > 0 or n < 2:
            raise NumericError(f"invalid r grid: r_max={r_max}, n={n}")
        return cls(np.linspace(0.0, r_max, n))

    @property
    def r_max(self) -> float:
        return float(self.r_values[-1])

    def __len__(self) -> int:
        return self.r_values.size

    def __eq__(self, other) -> bool:
        return isinstance(other, RGrid) and np.array_equal(self.r_values, other.r_values)

    def check_window(self, window: RectWindow) -> None:
        if not self.r_max < min(window.width, window.height) / 2:
            raise NumericError(
                f"r grid reaches {self.r_max} m, beyond half the shorter side of window {window.bbox()}"
            )

    def first_at_least(self, d) -> np.ndarray:
        """Index of the first r with r >= d (len(grid) when none)."""
        return np.searchsorted(self.r_values, d, side="left")

    def count_at_most(self, b) -> np.ndarray:
        """Number of r values with r <= b."""
        return np.searchsorted(self.r_values, b, side="right")


def poisson_reference(kind: StatKind, r: RGrid) -> np.ndarray:
    kind = StatKind(kind)
    if kind.is_k:
        return np.pi * r.r_values ** 2
    if kind.is_j:
        return np.ones(len(r))
    # F and G have no intensity-free Poisson reference in the inhomogeneous setting
    return np.full(len(r), np.nan)


@dataclass(frozen=True, eq=False)
class SummaryFunction:
    kind: StatKind
    r: RGrid
    value: np.ndarray
    reference: np.ndarray = field(default=None)
    defined: np.ndarray = field(default=None)

    def __post_init__(self):
        kind = StatKind(self.kind)
        value = np.asarray(self.value, dtype=float)
        if value.shape != (len(self.r),):
            raise NumericError(f"summary values of shape {value.shape} do not match the r grid ({len(self.r)})")
        defined = np.isfinite(value) if self.defined is None else np.asarray(self.defined, dtype=bool)
        value = np.where(defined, value, np.nan)
        reference = poisson_reference(kind, self.r) if self.reference is None else np.asarray(self.reference, dtype=float)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "defined", defined)
        object.__setattr__(self, "reference", reference)

    @property
    def r_values(self) -> np.ndarray:
        return self.r.r_values

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"r": self.r_values, "value": self.value, "reference": self.reference})
        if self.kind.is_j:
            df["defined"] = self.defined
        return df


def l_function(k: SummaryFunction) -> np.ndarray:
    """Variance-stabilised K: sqrt(K / pi), equal to r under Poisson."""
    if not k.kind.is_k:
        raise NumericError(f"L transform needs a K-kind curve, got {k.kind.value}")
    return np.sqrt(np.maximum(k.value, 0.0) / np.pi)


@dataclass(frozen=True, eq=False)
class GridPoints:
    """Regular lattice of test locations in the window for the empty-space function."""

    window: RectWindow
    xy: np.ndarray
    spacing: tuple[float, float]

    @classmethod
    def from_window(cls, window: RectWindow, dx: float, dy: float | None = None) -> "GridPoints":
        dy = dx if dy is None else dy
        if not (dx > 0 and dy > 0):
            raise NumericError(f"lattice spacing must be positive, got ({dx}, {dy})")
        nx = max(int(np.floor(window.width / dx + 1e-9)), 1)
        ny = max(int(np.floor(window.height / dy + 1e-9)), 1)
        # centred so the margins on both sides are equal
        x0 = window.x_min + (window.width - (nx - 1) * dx) / 2
        y0 = window.y_min + (window.height - (ny - 1) * dy) / 2
        gx, gy = np.meshgrid(x0 + dx * np.arange(nx), y0 + dy * np.arange(ny), indexing="ij")
        xy = np.column_stack([gx.ravel(), gy.ravel()])
        xy.setflags(write=False)
        return cls(window, xy, (float(dx), float(dy)))

    @classmethod
    def for_surface(cls, surface) -> "GridPoints":
        """Lattice at the cell centres of an intensity surface."""
        return cls.from_window(surface.window, surface.dx, surface.dy)

    def __len__(self) -> int:
        return self.xy.shape[0]
