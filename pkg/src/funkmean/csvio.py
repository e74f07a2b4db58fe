"""Read and write grouped curve tables.

Two layouts are understood:

wide
    ``#grid,t_1,...,t_m`` on the first line, then one ``group,id,v_1,...,v_m``
    row per curve. All curves share the grid.
long
    header ``group,id,time,value`` followed by one row per observation.
    Each curve (a ``(group, id)`` pair) lists its times in increasing order.

Group labels are free-form strings and are numbered in order of first
appearance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError
from .projection import DiscretizedCurve, FunctionalDataset

LONG_HEADER = ["group", "id", "time", "value"]


@dataclass
class CurveTable:
    """A parsed table: the dataset plus curve identifiers and the input layout."""

    data: FunctionalDataset
    ids: list = field(default_factory=list)
    layout: str = "wide"

    @property
    def group_index(self) -> dict:
        return {label: j for j, label in enumerate(self.data.labels)}


def _number(text: str, line: int, what: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line) from None
    if not math.isfinite(x):
        raise ParseError(f"{what} {text!r} is not finite", line)
    return x


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(cell.strip() for cell in row):
                yield lineno, [cell.strip() for cell in row]


def _assemble(curves: dict, layout: str) -> CurveTable:
    """``curves`` maps group label -> {id: DiscretizedCurve} in insertion order."""
    if len(curves) < 2:
        raise ParseError(f"found {len(curves)} group(s); at least 2 are required")
    labels = list(curves)
    groups = [list(curves[g].values()) for g in labels]
    ids = [list(curves[g]) for g in labels]
    return CurveTable(FunctionalDataset(groups, labels), ids, layout)


def _read_wide(rows) -> CurveTable:
    lineno, header = next(rows)
    if not header[0].startswith("#grid"):
        raise ParseError("wide layout needs a '#grid,t_1,...,t_m' first line", lineno)
    times = np.array([_number(c, lineno, "grid time") for c in header[1:]])
    if times.size < 2:
        raise ParseError("grid needs at least 2 time points", lineno)
    if np.any(np.diff(times) <= 0):
        raise ParseError("grid times must be strictly increasing", lineno)
    curves: dict = {}
    for lineno, row in rows:
        if len(row) != times.size + 2:
            raise ParseError(
                f"expected {times.size + 2} fields (group, id, {times.size} values), got {len(row)}",
                lineno,
            )
        label, cid = row[0], row[1]
        values = np.array([_number(c, lineno, "value") for c in row[2:]])
        bucket = curves.setdefault(label, {})
        if cid in bucket:
            raise ParseError(f"duplicate curve id {cid!r} in group {label!r}", lineno)
        bucket[cid] = DiscretizedCurve(times, values)
    return _assemble(curves, "wide")


def _read_long(rows) -> CurveTable:
    lineno, header = next(rows)
    if [h.lower() for h in header] != LONG_HEADER:
        raise ParseError(f"long layout needs the header {','.join(LONG_HEADER)}", lineno)
    points: dict = {}
    first_line: dict = {}
    for lineno, row in rows:
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
        label, cid = row[0], row[1]
        t = _number(row[2], lineno, "time")
        y = _number(row[3], lineno, "value")
        obs = points.setdefault(label, {}).setdefault(cid, [])
        first_line.setdefault((label, cid), lineno)
        if obs and t <= obs[-1][0]:
            raise ParseError(f"times of curve {label}/{cid} are not increasing", lineno)
        obs.append((t, y))
    curves: dict = {}
    for label, by_id in points.items():
        for cid, obs in by_id.items():
            if len(obs) < 2:
                raise ParseError(
                    f"curve {label}/{cid} has a single observation", first_line[(label, cid)]
                )
            arr = np.array(obs)
            curves.setdefault(label, {})[cid] = DiscretizedCurve(arr[:, 0], arr[:, 1])
    return _assemble(curves, "long")


def read_curves(path) -> CurveTable:
    """Parse a wide or long curve table; the layout is detected from line 1.

    Raises
    ------
    ParseError
        On any malformed content, with the offending line number.
    """
    rows = _rows(path)
    try:
        lineno, first = next(rows)
    except StopIteration:
        raise ParseError("file is empty") from None

    def replay():
        yield lineno, first
        yield from rows

    if first[0].startswith("#grid"):
        return _read_wide(replay())
    return _read_long(replay())


def _default_ids(data: FunctionalDataset) -> list:
    return [[str(i) for i in range(len(g))] for g in data.groups]


def write_wide(data: FunctionalDataset, path, ids=None) -> Path:
    """Write a shared-grid dataset in the wide layout."""
    if not data.shared_grid:
        raise ValueError("wide layout needs every curve on the same grid")
    ids = ids or _default_ids(data)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["#grid"] + [repr(float(t)) for t in data.groups[0][0].times])
        for label, g, gids in zip(data.labels, data.groups, ids):
            for cid, c in zip(gids, g):
                w.writerow([label, cid] + [repr(float(v)) for v in c.values])
    return path


def write_long(data: FunctionalDataset, path, ids=None) -> Path:
    """Write any dataset in the long layout."""
    ids = ids or _default_ids(data)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LONG_HEADER)
        for label, g, gids in zip(data.labels, data.groups, ids):
            for cid, c in zip(gids, g):
                for t, v in zip(c.times, c.values):
                    w.writerow([label, cid, repr(float(t)), repr(float(v))])
    return path
