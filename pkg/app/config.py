from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from intensity.bandwidth import default_candidates
from intensity.kernel import Bandwidth
from intensity.surface import INTENSITY_FLOOR
from pattern.census import DEFAULT_STATUS_MAP
from pattern.geometry import RectWindow
from utils.errors import DataError


class RunConfig(BaseModel):
    """Settings shared by every subcommand; the defaults reproduce the 50 ha plot analyses."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    window: tuple[float, float, float, float] = (0.0, 0.0, 1000.0, 500.0)
    nx: int = Field(256, ge=2)
    ny: int = Field(128, ge=2)

    bandwidth: Optional[float] = Field(None, gt=0)
    bandwidth_candidates: Optional[list[float]] = None
    n_candidates: int = Field(20, ge=1)
    leave_one_out: bool = False
    intensity_floor: float = Field(INTENSITY_FLOOR, gt=0)

    r_max_univariate: float = Field(25.0, gt=0)
    r_max_cross: float = Field(30.0, gt=0)
    n_r: int = Field(512, ge=2)

    nsim: int = Field(99, ge=1)
    nsim_envelope: int = Field(19, ge=1)
    envelope_rank: int = Field(1, ge=1)
    seed: int = Field(1, ge=0)

    census_id: int = Field(8, ge=1)
    reference_census: int = Field(1, ge=1)
    status_filter: Literal["alive", "any"] = "alive"
    status_map: dict[str, Literal["alive", "dead"]] = Field(default_factory=lambda: dict(DEFAULT_STATUS_MAP))
    min_count: int = Field(50, ge=0)

    reference_mode: Literal["simulation", "theoretical"] = "simulation"
    reestimate_null: bool = False
    tau_f: float = Field(0.05, ge=0, lt=1)
    n_jobs: int = 1

    @field_validator("bandwidth_candidates")
    @classmethod
    def _positive_candidates(cls, v):
        if v is not None and (not v or any(h <= 0 for h in v)):
            raise ValueError("bandwidth candidates must be a nonempty list of positive values")
        return v

    @field_validator("status_map")
    @classmethod
    def _extend_default_codes(cls, v):
        return {**DEFAULT_STATUS_MAP, **v}

    @model_validator(mode="after")
    def _check_ranges(self):
        w = self.rect_window
        half = min(w.width, w.height) / 2
        for name in ("r_max_univariate", "r_max_cross"):
            if getattr(self, name) >= half:
                raise ValueError(f"{name} must stay below half the shorter window side ({half} m)")
        return self

    @property
    def rect_window(self) -> RectWindow:
        return RectWindow.from_bbox(self.window)

    def candidates(self) -> list[Bandwidth]:
        if self.bandwidth_candidates:
            return [Bandwidth(h) for h in self.bandwidth_candidates]
        return default_candidates(self.rect_window, self.nx, self.ny, self.n_candidates)

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "RunConfig":
        """Read a flat TOML file (if given) and apply overrides; overrides set to None are ignored."""
        data: dict = {}
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as e:
                raise DataError(f"config error: cannot read {path}: {e}") from None
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "config"
            raise DataError(f"config error: {where}: {first['msg']}") from None

    def merged(self, **overrides) -> "RunConfig":
        return RunConfig.load(None, **{**self.model_dump(), **{k: v for k, v in overrides.items() if v is not None}})
