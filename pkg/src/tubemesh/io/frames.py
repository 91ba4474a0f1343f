import logging

import polars as pl

log = logging.getLogger(__name__)


def reorder_columns(df: pl.DataFrame, columns_order: list[str]) -> pl.DataFrame:
    """
    Put ``columns_order`` first (those present) and keep the rest after them.

    Example:
        >>> df = pl.DataFrame({"a_cp": [0.0], "z_index": [0], "a_l": [3.1]})
        >>> reorder_columns(df, ["z_index", "a_l"]).columns
        ['z_index', 'a_l', 'a_cp']
    """
    selected = [pl.col(col) for col in columns_order if col in df.columns]
    remaining = [pl.col(col) for col in df.columns if col not in columns_order]
    return df.select(selected + remaining)


def get_missing_columns(df: pl.DataFrame, required_columns: list[str]) -> list[str]:
    """Required columns absent from ``df``, compared case-insensitively."""
    available = {col.strip().lower() for col in df.columns}
    return [col for col in required_columns if col.lower() not in available]


def require_columns(df: pl.DataFrame, required_columns: list[str], source: str) -> pl.DataFrame:
    """
    Validate and normalise a table read from disk.

    Column names are stripped and lowercased, then every required column
    must be present.

    Raises
    ------
    ValueError
        Listing every missing column and the offending source.
    """
    df = df.rename({col: col.strip().lower() for col in df.columns})
    missing = get_missing_columns(df, required_columns)
    if missing:
        raise ValueError(f"'{source}' is missing required columns: {missing}")
    return df

