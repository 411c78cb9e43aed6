from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from hjbflow.alpha.piecewise import PiecewiseAlpha, piecewise_from_coefficients
from hjbflow.core.market import FloatArray, MarketModel

# 17 significant digits: one before the point, sixteen after.
FLOAT_FORMAT = "%.16e"

PathLike = Union[str, Path]

PIECE_COLUMNS = ("lo", "hi", "a", "b", "c")


def read_model_csv(path: PathLike) -> MarketModel:
    """First row mu, then one row of Sigma per asset. No header."""
    frame = pd.read_csv(path, header=None, dtype=np.float64, skip_blank_lines=True)
    values = frame.to_numpy()
    n = values.shape[1]
    if values.shape[0] != n + 1:
        raise ValueError(
            f"{path}: expected {n + 1} rows (mu then {n} covariance rows), got {values.shape[0]}"
        )
    return MarketModel(values[0], values[1:])


def write_model_csv(model: MarketModel, path: PathLike) -> None:
    rows = np.vstack([model.mu, model.sigma])
    pd.DataFrame(rows).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)


def read_price_frame(path: PathLike) -> pd.DataFrame:
    """Price table with a `date` column followed by one column per ticker."""
    frame = pd.read_csv(path)
    if frame.columns.empty or frame.columns[0] != "date":
        raise ValueError(f"{path}: first column must be 'date'")
    frame["date"] = pd.to_datetime(frame["date"], format="ISO8601")
    return frame.set_index("date")


def read_series_csv(path: PathLike, columns: Sequence[str]) -> tuple[FloatArray, FloatArray]:
    """Two named numeric columns, sorted by the first."""
    key, value = columns
    frame = pd.read_csv(path)
    missing = [c for c in (key, value) if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
    frame = frame[[key, value]].astype(np.float64).sort_values(key)
    if frame.isna().to_numpy().any():
        raise ValueError(f"{path}: empty cells")
    if len(frame) < 1:
        raise ValueError(f"{path}: no rows")
    return frame[key].to_numpy(), frame[value].to_numpy()


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT)
    return out


def pieces_frame(alpha: PiecewiseAlpha) -> pd.DataFrame:
    """One row per piece: interval, coefficients of a phi - b / phi + c, active set."""
    return pd.DataFrame(
        {
            "lo": [p.lo for p in alpha.pieces],
            "hi": [p.hi for p in alpha.pieces],
            "a": [p.a for p in alpha.pieces],
            "b": [p.b for p in alpha.pieces],
            "c": [p.c for p in alpha.pieces],
            "budget_binding": [int(p.budget_binding) for p in alpha.pieces],
            "active_set": [";".join(str(j + 1) for j in p.active_set) for p in alpha.pieces],
        }
    )


def read_pieces_csv(path: PathLike) -> PiecewiseAlpha:
    """Alpha from a piece table; rows must tile (lo, hi] in increasing order."""
    frame = pd.read_csv(path, keep_default_na=False)
    missing = [c for c in PIECE_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
    if len(frame) < 1:
        raise ValueError(f"{path}: no pieces")
    values = frame[list(PIECE_COLUMNS)].astype(np.float64).to_numpy()
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: empty or non-finite cells")
    binding = None
    if "budget_binding" in frame.columns:
        binding = [bool(int(v)) for v in frame["budget_binding"]]
    return piecewise_from_coefficients(
        [(float(lo), float(hi)) for lo, hi in values[:, :2]],
        [(float(a), float(b), float(c)) for a, b, c in values[:, 2:]],
        binding,
    )
