"""Layout documents and population CSV ingestion."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .exceptions import IngestionError
from .grid import IntervalSet
from .layout import BarLayout, Population

LAYOUT_FORMAT = "geosampling-layout"
LAYOUT_VERSION = 1


def layout_to_dict(layout: BarLayout) -> dict:
    return {
        "format": LAYOUT_FORMAT,
        "version": LAYOUT_VERSION,
        "grid_resolution": layout.grid,
        "fip": list(layout.fip),
        "units": [
            {"unit": k + 1, "intervals": [[a, b] for a, b in bar]}
            for k, bar in enumerate(layout.bars)
        ],
    }


def layout_from_dict(doc: dict) -> BarLayout:
    if doc.get("format") != LAYOUT_FORMAT:
        raise IngestionError(f"not a layout document (format={doc.get('format')!r})")
    try:
        grid = doc["grid_resolution"]
        fip = doc["fip"]
        units = doc["units"]
    except KeyError as exc:
        raise IngestionError(f"layout document lacks field {exc}") from None
    for value in [grid, *fip] + [c for u in units for iv in u["intervals"] for c in iv]:
        if not isinstance(value, int) or isinstance(value, bool):
            raise IngestionError(f"layout documents hold integers only, found {value!r}")
    if [u["unit"] for u in units] != list(range(1, len(units) + 1)):
        raise IngestionError("units must be listed in order 1..N")
    bars = tuple(IntervalSet([tuple(iv) for iv in u["intervals"]], grid) for u in units)
    return BarLayout(grid, bars, tuple(fip))


def dumps_layout(layout: BarLayout) -> str:
    return json.dumps(layout_to_dict(layout), indent=1) + "\n"


def write_layout(layout: BarLayout, path) -> None:
    Path(path).write_text(dumps_layout(layout))


def read_layout(path) -> BarLayout:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON ({exc})") from None
    return layout_from_dict(doc)


def ingest_population(path, x_col: Optional[str] = None, y_col: Optional[str] = None,
                      z_col: Optional[str] = None, id_col: Optional[str] = None,
                      exclude_ids: Iterable[str] = ()) -> Population:
    """Read designated numeric columns from a CSV with a header row.

    Rows are identified by ``id_col`` when given, otherwise by their 1-based
    data row number; ``exclude_ids`` drops rows by that identifier (used for
    outlier lists).  Every offending cell is reported at once.
    """
    columns = {name: col for name, col in (("x", x_col), ("y", y_col), ("z", z_col)) if col}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise IngestionError(f"{path}: empty file")
        missing = [c for c in list(columns.values()) + ([id_col] if id_col else []) if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise IngestionError(f"{path}: empty population")

    excluded = {str(e).strip() for e in exclude_ids}
    ids, values, problems = [], {name: [] for name in columns}, []
    for number, row in enumerate(rows, start=1):
        rid = row[id_col].strip() if id_col else str(number)
        if rid in excluded:
            continue
        ids.append(rid)
        for name, col in columns.items():
            cell = (row.get(col) or "").strip()
            try:
                v = float(cell)
                if not math.isfinite(v):
                    raise ValueError
            except ValueError:
                problems.append(f"row {number} column {col}: {cell!r}")
                v = math.nan
            values[name].append(v)
    if problems:
        raise IngestionError("non-numeric cells: " + "; ".join(problems))
    unknown = excluded - {row[id_col].strip() if id_col else str(i) for i, row in enumerate(rows, start=1)}
    if unknown:
        raise IngestionError(f"excluded ids not found: {sorted(unknown)}")
    if not ids:
        raise IngestionError(f"{path}: empty population")
    if not columns:
        raise IngestionError("no variable columns designated")
    return Population(ids=ids, **{name: np.asarray(v) for name, v in values.items()})
