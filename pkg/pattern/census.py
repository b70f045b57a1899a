from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping

import numpy as np
import pandas as pd
import pandera as pa

from pattern.core import MultiTypePattern, PointPattern
from pattern.geometry import RectWindow
from utils.errors import DataError

logger = logging.getLogger(__name__)

CENSUS_COLUMNS = ["tree_id", "species", "x", "y", "status", "census_id"]
DEFAULT_STATUS_MAP = {"A": "alive", "D": "dead"}
STATUS_CODES = {"alive": "A", "dead": "D"}

StatusFilter = Literal["alive", "any"]

CENSUS_SCHEMA = pa.DataFrameSchema(
    {
        "tree_id": pa.Column(str, nullable=False),
        "species": pa.Column(str, pa.Check.str_length(min_value=1), nullable=False),
        "x": pa.Column(float, nullable=False),
        "y": pa.Column(float, nullable=False),
        "status": pa.Column(str, pa.Check.isin(["alive", "dead"])),
        "census_id": pa.Column(int, pa.Check.ge(1)),
    },
    strict=True,
    ordered=True,
)


@dataclass(frozen=True)
class CensusRecord:
    tree_id: str
    species: str
    x: float
    y: float
    status: str
    census_id: int


def records_to_frame(records: Iterable[CensusRecord]) -> pd.DataFrame:
    df = pd.DataFrame([asdict(r) for r in records], columns=CENSUS_COLUMNS)
    return _coerce(df)


def frame_to_records(df: pd.DataFrame) -> list[CensusRecord]:
    return [CensusRecord(**row) for row in df[CENSUS_COLUMNS].to_dict(orient="records")]


def _coerce(df: pd.DataFrame) -> pd.DataFrame:
    out = df.astype({"tree_id": str, "species": str, "x": float, "y": float, "status": str})
    out["census_id"] = out["census_id"].astype("int64")
    return out.reset_index(drop=True)


def _bad_rows(mask: pd.Series) -> list[int]:
    # data rows are numbered from 1, the header line not counted
    return [int(i) + 1 for i in np.flatnonzero(mask.to_numpy())]


def _preview(rows: list[int], limit: int = 10) -> str:
    head = ", ".join(str(r) for r in rows[:limit])
    return head + (", ..." if len(rows) > limit else "")


def ingest_census(
    path: str | Path,
    window: RectWindow,
    status_map: Mapping[str, str] | None = None,
) -> pd.DataFrame:
    """
    Read a census CSV (`tree_id,species,x,y,status,census_id`) into a validated
    frame with one row per record. Raw status codes are collapsed to alive/dead
    through `status_map`.
    """
    status_map = dict(DEFAULT_STATUS_MAP if status_map is None else status_map)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"schema error: {path} has no header") from None

    raw.columns = [c.strip() for c in raw.columns]
    missing = [c for c in CENSUS_COLUMNS if c not in raw.columns]
    if missing:
        raise DataError(f"schema error: {path} lacks columns {missing}")
    raw = raw[CENSUS_COLUMNS]

    x = pd.to_numeric(raw["x"].str.strip(), errors="coerce")
    y = pd.to_numeric(raw["y"].str.strip(), errors="coerce")
    bad = x.isna() | y.isna() | ~np.isfinite(x.fillna(0)) | ~np.isfinite(y.fillna(0))
    if bad.any():
        raise DataError(f"unparsable coordinates at row {_preview(_bad_rows(bad))}")

    census_id = pd.to_numeric(raw["census_id"].str.strip(), errors="coerce")
    bad = census_id.isna() | (census_id.fillna(0) < 1) | (census_id.fillna(0) % 1 != 0)
    if bad.any():
        raise DataError(f"invalid census_id at row {_preview(_bad_rows(bad))}")

    status = raw["status"].str.strip().map(status_map)
    bad = status.isna()
    if bad.any():
        codes = sorted(set(raw.loc[bad, "status"]))
        raise DataError(f"unmapped status codes {codes} at row {_preview(_bad_rows(bad))}")

    df = pd.DataFrame({
        "tree_id": raw["tree_id"].str.strip(),
        "species": raw["species"].str.strip(),
        "x": x.astype(float),
        "y": y.astype(float),
        "status": status.astype(str),
        "census_id": census_id.astype("int64"),
    })

    if len(df):
        outside = pd.Series(~window.contains(df[["x", "y"]].to_numpy()), index=df.index)
        if outside.any():
            raise DataError(f"out-of-window point at row {_bad_rows(outside)[0]}")

    try:
        df = CENSUS_SCHEMA.validate(df)
    except pa.errors.SchemaError as e:
        raise DataError(f"schema error: {e}") from None

    dups = int(df.duplicated(subset=["census_id", "species", "x", "y"]).sum())
    if dups:
        logger.warning("%d records share coordinates with another stem of the same species; keeping all", dups)
    logger.info("ingested %d census records from %s", len(df), path)
    return df.reset_index(drop=True)


def write_census(records: pd.DataFrame, path: str | Path) -> Path:
    """Serialise records back to the census CSV schema (status as A/D)."""
    from utils.run_artifacts import write_frame

    out = records[CENSUS_COLUMNS].copy()
    out["status"] = out["status"].map(STATUS_CODES)
    return write_frame(out, path)


def _selection(records: pd.DataFrame, census_id: int, status_filter: StatusFilter) -> pd.Series:
    if status_filter not in ("alive", "any"):
        raise DataError(f"status_filter must be 'alive' or 'any', got {status_filter!r}")
    mask = records["census_id"] == census_id
    if status_filter == "alive":
        mask &= records["status"] == "alive"
    return mask


def extract_species(
    records: pd.DataFrame,
    species: str,
    census_id: int,
    status_filter: StatusFilter,
    window: RectWindow,
) -> PointPattern:
    mask = _selection(records, census_id, status_filter) & (records["species"] == species)
    return PointPattern(records.loc[mask, ["x", "y"]].to_numpy(), window)


def multitype_from_census(
    records: pd.DataFrame,
    census_id: int,
    status_filter: StatusFilter,
    window: RectWindow,
) -> MultiTypePattern:
    sel = records.loc[_selection(records, census_id, status_filter)]
    patterns = {
        str(code): PointPattern(grp[["x", "y"]].to_numpy(), window)
        for code, grp in sel.groupby("species", sort=True)
    }
    return MultiTypePattern(window, patterns)
