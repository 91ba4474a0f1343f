"""
CSV artifacts: radial fields, area signals and per-patient signal tables.
"""

import logging
from pathlib import Path

import numpy as np
import polars as pl

from tubemesh.geometry.types import AreaSignalSet, RadialField
from tubemesh.io.frames import reorder_columns, require_columns

log = logging.getLogger(__name__)

FIELD_COLUMNS = ["theta_index", "z_index", "r_l", "r_cp", "r_ncp", "class"]
AREA_COLUMNS = ["z_index", "a_l", "a_cp", "a_ncp"]
PATIENT_SIGNAL_COLUMNS = ["artery", *AREA_COLUMNS]


def field_to_frame(field: RadialField) -> pl.DataFrame:
    v, z = np.meshgrid(np.arange(field.n_theta), np.arange(field.length), indexing="ij")
    df = pl.DataFrame(
        {
            "z_index": z.ravel(),
            "theta_index": v.ravel(),
            "r_l": field.r_l.ravel(),
            "r_cp": field.r_cp.ravel(),
            "r_ncp": field.r_ncp.ravel(),
            "class": field.plaque_class.ravel(),
        }
    )
    return reorder_columns(df, FIELD_COLUMNS)


def write_field_csv(field: RadialField, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    field_to_frame(field).write_csv(path)
    return path


def read_field_csv(path: str | Path, dz: float = 0.5) -> RadialField:
    """
    Read a radial field written by ``write_field_csv``.

    Rows may come in any order; the grid extent is taken from the largest
    indices and every (θ, z) vertex must be present exactly once.
    """
    df = require_columns(pl.read_csv(path), FIELD_COLUMNS, str(path))
    df = df.sort(["theta_index", "z_index"])
    n_theta = int(df.get_column("theta_index").max()) + 1
    length = int(df.get_column("z_index").max()) + 1
    if df.height != n_theta * length:
        raise ValueError(
            f"'{path}' has {df.height} rows, expected {n_theta * length} for a {n_theta}x{length} grid"
        )
    shape = (n_theta, length)
    return RadialField(
        r_l=df.get_column("r_l").to_numpy().reshape(shape),
        r_cp=df.get_column("r_cp").to_numpy().reshape(shape),
        r_ncp=df.get_column("r_ncp").to_numpy().reshape(shape),
        plaque_class=df.get_column("class").to_numpy().reshape(shape),
        dz=dz,
    )


def areas_to_frame(areas: AreaSignalSet) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "z_index": np.arange(areas.length),
            "a_l": areas.a_l,
            "a_cp": areas.a_cp,
            "a_ncp": areas.a_ncp,
        }
    )


def write_areas_csv(areas: AreaSignalSet, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    areas_to_frame(areas).write_csv(path)
    return path


def _frame_to_areas(df: pl.DataFrame, dz: float) -> AreaSignalSet:
    df = df.sort("z_index")
    return AreaSignalSet(
        a_l=df.get_column("a_l").to_numpy(),
        a_cp=df.get_column("a_cp").to_numpy(),
        a_ncp=df.get_column("a_ncp").to_numpy(),
        dz=dz,
    )


def read_areas_csv(path: str | Path, dz: float = 0.5) -> AreaSignalSet:
    df = require_columns(pl.read_csv(path), AREA_COLUMNS, str(path))
    return _frame_to_areas(df, dz)


def write_patient_signals(arteries: dict[str, AreaSignalSet], path: str | Path) -> Path:
    """One CSV per patient: the area columns stacked with an ``artery`` key."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = [
        areas_to_frame(areas).with_columns(pl.lit(name).alias("artery"))
        for name, areas in arteries.items()
    ]
    df = pl.concat(frames) if frames else pl.DataFrame(schema={c: pl.Float64 for c in PATIENT_SIGNAL_COLUMNS})
    reorder_columns(df, PATIENT_SIGNAL_COLUMNS).write_csv(path)
    return path


def read_patient_signals(path: str | Path, dz: float = 0.5) -> dict[str, AreaSignalSet]:
    df = require_columns(pl.read_csv(path), PATIENT_SIGNAL_COLUMNS, str(path))
    arteries: dict[str, AreaSignalSet] = {}
    for name in df.get_column("artery").cast(pl.Utf8).unique(maintain_order=True).to_list():
        arteries[name] = _frame_to_areas(df.filter(pl.col("artery") == name), dz)
    return arteries
