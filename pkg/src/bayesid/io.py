"""CSV ingestion and deterministic CSV/JSON output.

Every file written here embeds the run configuration: JSON documents carry a
``config`` key and CSV files start with a ``# config: {...}`` comment line.
Floats are written with ``repr`` so a matrix survives a write/read round trip
bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import DataMatrix
from .metrics import PriceSeries

CONFIG_PREFIX = "# config: "


class InputError(ValueError):
    """Malformed input file; the message names the offending location."""


def _parse_float(cell: str, where: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise InputError(f"{where}: non-numeric cell {cell!r}") from None
    if not math.isfinite(value):
        raise InputError(f"{where}: non-finite value {cell!r} (NaN/inf are rejected)")
    return value


def _data_rows(path: Path):
    """CSV rows with 1-based line numbers, skipping ``#`` comment lines."""
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            yield lineno, row


def load_alpha_matrix(path) -> DataMatrix:
    """Alpha CSV: header of date labels after a corner cell, one alpha per row."""
    path = Path(path)
    rows = iter(_data_rows(path))
    try:
        _, header = next(rows)
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    dates = [c.strip() for c in header[1:]]
    if not dates:
        raise InputError(f"{path}: header has no date columns")
    labels, values = [], []
    for lineno, row in rows:
        if len(row) != len(header):
            raise InputError(
                f"{path}: ragged row at line {lineno} ({row[0]!r}): {len(row)} cells, expected {len(header)}"
            )
        labels.append(row[0].strip())
        values.append([
            _parse_float(cell, f"{path}: line {lineno}, column {col} ({dates[col - 1]})")
            for col, cell in enumerate(row[1:], start=1)
        ])
    if not values:
        raise InputError(f"{path}: no alpha rows")
    return DataMatrix(np.array(values), row_labels=labels, col_labels=dates)


def load_prices(path) -> PriceSeries:
    """Price CSV with a ``date,close`` header and ascending dates."""
    path = Path(path)
    rows = iter(_data_rows(path))
    try:
        _, header = next(rows)
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    if [c.strip().lower() for c in header] != ["date", "close"]:
        raise InputError(f"{path}: header must be 'date,close', got {header}")
    dates, closes = [], []
    for lineno, row in rows:
        if len(row) != 2:
            raise InputError(f"{path}: line {lineno} has {len(row)} cells, expected 2")
        dates.append(row[0].strip())
        closes.append(_parse_float(row[1], f"{path}: line {lineno} ({row[0]})"))
    try:
        return PriceSeries(dates, np.array(closes))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_importance(path) -> np.ndarray:
    """One real per line; infinities are clamped to +-50 before squashing."""
    path = Path(path)
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError:
            raise InputError(f"{path}: line {lineno}: not a number: {text!r}") from None
        if math.isnan(value):
            raise InputError(f"{path}: line {lineno}: NaN importance")
        out.append(max(-50.0, min(50.0, value)))
    return np.array(out)


def config_line(config: dict) -> str:
    return CONFIG_PREFIX + json.dumps(config, sort_keys=True, separators=(",", ":"))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows, config: dict | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write(config_line(config) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_matrix(path, A: DataMatrix, config: dict | None = None, corner: str = "alpha"):
    n, d = A.shape
    cols = A.col_labels or [str(j) for j in range(d)]
    rows = A.row_labels or [str(i) for i in range(n)]
    write_csv(path, [corner, *cols], ([label, *vals] for label, vals in zip(rows, A.values)), config)


def read_config(path) -> dict:
    """The embedded configuration of a file written by this module."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())["config"]
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
    if not first.startswith(CONFIG_PREFIX):
        raise InputError(f"{path}: no embedded config line")
    return json.loads(first[len(CONFIG_PREFIX):])


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path, payload: dict, config: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": config, **to_jsonable(payload)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
