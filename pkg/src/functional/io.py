# src/functional/io.py
import json
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from common.errors import CsvParseError, DataError, ShapeMismatchError
from common.logger_utils import setup_logger
from functional.dataset import FunctionalDataset, GridSpec, resolve_grid
from helpers.formatting import FLOAT_FORMAT, dumps_json

logger = setup_logger(__name__)


def curve_columns(p: int):
    return [f"t_{j}" for j in range(1, p + 1)]


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise DataError(f"Output directory does not exist: {parent}")


def _read_numeric_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError(f"Input file not found: {path}")
    try:
        frame = pd.read_csv(path, sep=',', header=0, dtype=str, encoding='utf-8', skipinitialspace=True)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvParseError(f"{path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise CsvParseError(f"{path}: file is empty") from e

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad = ~np.isfinite(numeric.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        column = frame.columns[col]
        # header is line 1, data rows start at line 2
        raise CsvParseError(
            f"{path}: row {row + 1} (line {row + 2}), column '{column}': "
            f"cannot parse {frame.iat[row, col]!r} as a finite number"
        )
    # float() on the raw strings is correctly rounded
    return pd.DataFrame(frame.to_numpy(dtype=object).astype(float), columns=frame.columns)


def read_curves(path: str) -> np.ndarray:
    """
    Reads a wide curve table: one row per subject, columns t_1..t_p.
    """
    return _read_numeric_csv(path).to_numpy()


def read_responses(path: str) -> np.ndarray:
    frame = _read_numeric_csv(path)
    column = 'y' if 'y' in frame.columns else frame.columns[0]
    return frame[column].to_numpy()


def read_metadata(path: Optional[str]) -> Dict[str, Any]:
    if not path or not os.path.exists(path):
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid metadata JSON: {e}") from e


def load_dataset(curves_path: str, responses_path: str, metadata_path: Optional[str] = None) -> FunctionalDataset:
    X = read_curves(curves_path)
    Y = read_responses(responses_path)
    metadata = read_metadata(metadata_path)
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(
            f"{curves_path} has {X.shape[0]} curves but {responses_path} has {Y.shape[0]} responses."
        )
    grid_data = metadata.get('grid')
    if not grid_data:
        logger.debug("No grid metadata found, assuming an equidistant grid on [0, 1].")
    grid = resolve_grid(X.shape[1], GridSpec.from_dict(grid_data) if grid_data else None)
    logger.debug(f"Loaded {X.shape[0]} curves on {X.shape[1]} grid points from {curves_path}")
    return FunctionalDataset(grid, X, Y, metadata)


def write_curves(X: np.ndarray, path: str):
    _ensure_parent(path)
    frame = pd.DataFrame(X, columns=curve_columns(X.shape[1]))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8')


def write_responses(Y: np.ndarray, path: str, extra: Optional[Dict[str, np.ndarray]] = None):
    _ensure_parent(path)
    columns = {'y': np.asarray(Y, dtype=float)}
    columns.update(extra or {})
    pd.DataFrame(columns).to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8')


def write_json(data: Any, path: str):
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_json(data))
        f.write('\n')


def write_frame(frame: pd.DataFrame, path: str):
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8')
