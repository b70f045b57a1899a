from __future__ import annotations

import logging

import pandas as pd

from intensity.kernel import Bandwidth, kernel_intensity
from intensity.surface import INTENSITY_FLOOR, IntensitySurface, rescale_to_count
from pattern.core import PointPattern
from pattern.geometry import RectWindow
from utils.errors import DataError

logger = logging.getLogger(__name__)


def null_intensity(
    reference: pd.DataFrame,
    latest: pd.DataFrame,
    species: str,
    ref_census: int,
    latest_census: int,
    h: Bandwidth | float,
    nx: int,
    ny: int,
    window: RectWindow,
    floor: float = INTENSITY_FLOOR,
) -> IntensitySurface:
    """
    Intensity for the null hypothesis, estimated from an earlier census so the
    observed pattern is not used twice: reference-census trees of `species` that
    are still alive in the latest census are removed, the remainder is kernel
    smoothed, and the surface is scaled to the latest alive count.
    """
    ref = reference[(reference["census_id"] == ref_census) & (reference["species"] == species)]
    alive = latest[
        (latest["census_id"] == latest_census)
        & (latest["species"] == species)
        & (latest["status"] == "alive")
    ]
    survivors = set(alive["tree_id"])
    trimmed = ref[~ref["tree_id"].isin(survivors)]
    logger.info(
        "null intensity for %s: %d reference trees, %d still alive, %d kept, target %d",
        species, len(ref), len(ref) - len(trimmed), len(trimmed), len(alive),
    )
    if trimmed.empty:
        raise DataError(f"null intensity undefined for species {species!r}: no reference trees left after trimming")
    if alive.empty:
        raise DataError(f"null intensity undefined for species {species!r}: no alive trees in census {latest_census}")

    surface = kernel_intensity(PointPattern(trimmed[["x", "y"]].to_numpy(), window), h, nx, ny, floor=floor)
    return rescale_to_count(surface, len(alive))
