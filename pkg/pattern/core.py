from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np
import pandas as pd

from pattern.geometry import RectWindow
from utils.errors import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Immutable set of locations observed in a rectangular window."""

    xy: np.ndarray
    window: RectWindow

    def __post_init__(self):
        xy = np.array(self.xy, dtype=float).reshape(-1, 2)
        if not np.isfinite(xy).all():
            raise DataError("point pattern contains NaN or infinite coordinates")
        outside = np.flatnonzero(~self.window.contains(xy)) if len(xy) else []
        if len(outside):
            raise DataError(f"out-of-window point at index {int(outside[0])}")
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)

    @classmethod
    def empty(cls, window: RectWindow) -> "PointPattern":
        return cls(np.empty((0, 2)), window)

    @property
    def n(self) -> int:
        return self.xy.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]

    def duplicate_count(self) -> int:
        """Number of points sharing their coordinates with an earlier point."""
        if self.n == 0:
            return 0
        return self.n - np.unique(self.xy, axis=0).shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "y": self.y})


@dataclass(frozen=True)
class MultiTypePattern:
    """Per-species point patterns sharing one window."""

    window: RectWindow
    patterns: Mapping[str, PointPattern] = field(default_factory=dict)

    def __post_init__(self):
        for code, pat in self.patterns.items():
            if pat.window != self.window:
                raise DataError(f"species {code!r} does not share the window {self.window.bbox()}")
        object.__setattr__(self, "patterns", dict(sorted(self.patterns.items())))

    def __getitem__(self, code: str) -> PointPattern:
        try:
            return self.patterns[code]
        except KeyError:
            raise DataError(f"unknown species code {code!r}") from None

    def __contains__(self, code: str) -> bool:
        return code in self.patterns

    def __iter__(self) -> Iterator[str]:
        return iter(self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def species(self) -> list[str]:
        return list(self.patterns)

    def counts(self) -> dict[str, int]:
        return {code: pat.n for code, pat in self.patterns.items()}

    def to_frame(self) -> pd.DataFrame:
        frames = [pat.to_frame().assign(species=code) for code, pat in self.patterns.items()]
        if not frames:
            return pd.DataFrame(columns=["x", "y", "species"])
        return pd.concat(frames, ignore_index=True)[["x", "y", "species"]]


def species_over_threshold(m: MultiTypePattern, min_count: int) -> list[str]:
    """Species with strictly more than `min_count` points, in lexicographic order."""
    if min_count < 0:
        raise DataError("min_count must be nonnegative")
    return sorted(code for code, n in m.counts().items() if n > min_count)


def write_pattern(p: PointPattern | MultiTypePattern, path: str | Path) -> Path:
    from utils.run_artifacts import write_frame

    return write_frame(p.to_frame(), path)


def read_pattern(path: str | Path, window: RectWindow) -> PointPattern | MultiTypePattern:
    """Read an `x,y` (or `x,y,species`) CSV back into a pattern."""
    df = pd.read_csv(path, dtype={"species": str})
    missing = {"x", "y"} - set(df.columns)
    if missing:
        raise DataError(f"schema error: pattern file {path} lacks columns {sorted(missing)}")
    if "species" not in df.columns:
        return PointPattern(df[["x", "y"]].to_numpy(), window)
    patterns = {
        code: PointPattern(grp[["x", "y"]].to_numpy(), window)
        for code, grp in df.groupby("species", sort=True)
    }
    return MultiTypePattern(window, patterns)
