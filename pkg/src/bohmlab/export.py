"""
File output: sampled fields, residual reports, sweeps and snapshots.

CSV goes through pandas; every CSV of fields gets a JSON sidecar with the
grid and the bundle metadata. JSON output writes ``null`` for excluded cells.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
import pandas as pd

from .config import OUTPUT_FORMATS
from .errors import ConfigError
from .numerics import Grid
from .propagate import Snapshots

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _check_format(fmt: str) -> None:
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"Output format must be one of {OUTPUT_FORMATS}, got {fmt!r}")


def _prepare(path: PathLike) -> Path:
    path = Path(path).resolve()
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def json_safe(value: Any) -> Any:
    """Replace NaN/inf by None and numpy scalars/arrays by plain Python values."""
    if isinstance(value, Mapping):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(data: Any, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(json_safe(data), indent=2, allow_nan=False), encoding="utf-8")
    return path


def fields_frame(fields: Mapping[str, np.ndarray], grid: Grid) -> pd.DataFrame:
    """One row per grid point (t-major), columns x, t and one per field."""
    xx, tt = grid.mesh()
    columns = {"x": xx.ravel(), "t": tt.ravel()}
    for name, values in fields.items():
        if np.shape(values) != grid.shape:
            raise ConfigError(f"Field '{name}' has shape {np.shape(values)}, grid is {grid.shape}")
        columns[name] = np.asarray(values).ravel()
    return pd.DataFrame(columns)


def write_fields(
    fields: Mapping[str, np.ndarray],
    grid: Grid,
    metadata: Mapping[str, Any],
    out_dir: PathLike,
    stem: str,
    fmt: str = "csv",
) -> List[Path]:
    """
    Write sampled fields.

    Returns:
        Paths written: the CSV and its sidecar, or the single JSON document
    """
    _check_format(fmt)
    out_dir = Path(out_dir)
    header = {"grid": grid.descriptor(), "excluded_fraction": grid.excluded_fraction, **metadata}
    if fmt == "json":
        document = {**header, "fields": {name: np.asarray(values) for name, values in fields.items()}}
        return [write_json(document, out_dir / f"{stem}.json")]

    csv_path = _prepare(out_dir / f"{stem}.csv")
    fields_frame(fields, grid).to_csv(csv_path, index=False, float_format="%.17g")
    sidecar = write_json({**header, "columns": ["x", "t", *fields]}, out_dir / f"{stem}.json")
    logger.debug("Wrote %s and %s", csv_path, sidecar)
    return [csv_path, sidecar]


def read_fields(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def report_rows(reports: Iterable, tolerances: Optional[Mapping[str, bool]] = None) -> List[Dict[str, Any]]:
    """
    Report dicts with a ``passed`` flag; ``tolerances`` maps a report name to
    its pass/fail decision when the caller already made it.
    """
    rows = []
    for report in reports:
        row = report.as_dict()
        if tolerances is not None and report.name in tolerances:
            row["passed"] = bool(tolerances[report.name])
        rows.append(row)
    return rows


def write_reports(rows: List[Dict[str, Any]], path: PathLike) -> Path:
    return write_json(rows, path)


def write_table(frame: pd.DataFrame, path: PathLike, fmt: str = "csv") -> Path:
    """Sweep or summary table as CSV, or as a JSON list of records."""
    _check_format(fmt)
    path = Path(path).with_suffix(f".{fmt}")
    if fmt == "json":
        return write_json(frame.to_dict(orient="records"), path)
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def write_snapshots(snapshots: Snapshots, path: PathLike, fmt: str = "csv") -> Path:
    """Snapshots as a long ``t,x,re,im`` CSV or a JSON time series."""
    _check_format(fmt)
    path = Path(path).with_suffix(f".{fmt}")
    if fmt == "json":
        return write_json(
            {
                "x": snapshots.x,
                "series": [
                    {"t": float(t), "re": psi.real, "im": psi.imag}
                    for t, psi in zip(snapshots.times, snapshots.psi)
                ],
            },
            path,
        )
    path = _prepare(path)
    snapshots.to_frame().to_csv(path, index=False, float_format="%.17g")
    return path
