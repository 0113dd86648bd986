import csv
import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from typeguard import typechecked

from .constants import CSV_SIGNIFICANT_DIGITS
from .geom3 import LoopSamples

logger = logging.getLogger(__name__)

Cell = str | int | float | None

LOOP_HEADER = ("alpha", "k", "x", "y", "z")
SNAPSHOT_HEADER = ("T", "alpha", "k", "x", "y", "z")
SERIES_HEADER = ("T", "L_l", "flag")
INVARIANT_HEADER = ("chern_quadrature", "chern_lattice", "linking_static", "grid_used", "gap")
PHASE_DIAGRAM_HEADER = (
    "mu",
    "chern_lattice",
    "chern_quadrature",
    "linking_static",
    "linking_dynamic_Tmax",
    "gap",
    "status",
)


@typechecked
def format_float(value: float) -> str:
    """
    Format a real with 12 significant digits, independent of the locale.

    Examples:
        >>> format_float(1.0)
        '1'
        >>> format_float(2.0 / 3.0)
        '0.666666666667'
        >>> format_float(float("nan"))
        'nan'
    """
    if math.isnan(value):
        return "nan"
    return f"{value:.{CSV_SIGNIFICANT_DIGITS}g}"


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool | str):
        return str(value)
    if isinstance(value, int | np.integer):
        return str(int(value))
    return format_float(float(value))


def _json_cell(value: Cell) -> Cell:
    if isinstance(value, float | np.floating):
        return None if math.isnan(value) else float(format_float(float(value)))
    if isinstance(value, np.integer):
        return int(value)
    return value


@typechecked
def ensure_output_dir(directory: Path) -> Path:
    """Create the output directory (and parents) when missing."""
    directory.mkdir(parents=True, exist_ok=True)
    return directory


@typechecked
def write_table(
    path: Path, header: Sequence[str], rows: Sequence[Sequence[Cell]], json_mirror: bool = False
) -> list[Path]:
    """
    Write rows as CSV, optionally mirrored as a JSON list of records.

    Every float is printed with 12 significant digits and rows keep their order,
    so identical inputs give byte-identical files.

    Args:
        path: Destination of the CSV file
        header: Column names
        rows: Row values in header order
        json_mirror: Also write the same data to `path` with a .json suffix

    Returns:
        The written paths
    """
    ensure_output_dir(path.parent)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([format_cell(value) for value in row] for row in rows)
    written = [path]

    if json_mirror:
        json_path = path.with_suffix(".json")
        records = [{name: _json_cell(value) for name, value in zip(header, row, strict=True)} for row in rows]
        json_path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
        written.append(json_path)

    logger.info(f"Wrote {len(rows)} rows to {', '.join(str(p) for p in written)}")
    return written


@typechecked
def loop_rows(loops: Sequence[LoopSamples], prefix: Sequence[Cell] = ()) -> list[list[Cell]]:
    """Rows (prefix..., alpha, k, x, y, z) of several loops, ordered by alpha then k."""
    rows = []
    for alpha, loop in enumerate(loops, start=1):
        for k, point in zip(loop.ks, loop.points, strict=True):
            rows.append([*prefix, alpha, float(k), *(float(c) for c in point)])
    return rows
