"""Result tables and their CSV / JSON renderings."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, TextIO
import csv
import json
import math

import numpy as np

from .errors import DomainError

FORMATS = ("csv", "json")
DIGITS = 17


@dataclass
class Table:
    """Named columns, rows of values, and the resolved run configuration."""

    columns: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise DomainError(f"Row has {len(values)} values for columns {list(self.columns)}")
        self.rows.append(values)

    def records(self) -> List[Dict[str, Any]]:
        return [{name: _plain(value) for name, value in zip(self.columns, row)} for row in self.rows]


def _plain(value: Any) -> Any:
    """numpy scalars and tuples to JSON-friendly Python values."""
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (tuple, list, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def format_number(value: Any, digits: int = DIGITS) -> str:
    """17 significant digits for floats; everything else through str."""
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return f"{value:.{digits}g}"
    if isinstance(value, list):
        return " ".join(format_number(v, digits) for v in value)
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return f"{format_number(value['re'], digits)}{value['im']:+.{digits}g}j"
    return str(value)


def _flatten(config: Dict[str, Any], prefix: str = "") -> List[tuple]:
    items = []
    for key in sorted(config):
        value = config[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, f"{name}."))
        else:
            items.append((name, value))
    return items


def write_csv(table: Table, stream: TextIO, digits: int = DIGITS) -> None:
    for key, value in _flatten(_plain(table.config)):
        stream.write(f"# {key}: {format_number(value, digits) if value is not None else 'null'}\n")
    writer = csv.writer(stream, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(list(table.columns))
    for row in table.rows:
        writer.writerow([format_number(value, digits) for value in row])


def _rounded(value: Any, digits: int) -> Any:
    if isinstance(value, float) and math.isfinite(value):
        return float(f"{value:.{digits}g}")
    if isinstance(value, list):
        return [_rounded(v, digits) for v in value]
    if isinstance(value, dict):
        return {k: _rounded(v, digits) for k, v in value.items()}
    return value


def write_json(table: Table, stream: TextIO, digits: int = DIGITS) -> None:
    payload = {
        "config": _rounded(_plain(table.config), digits),
        "rows": [_rounded(record, digits) for record in table.records()],
    }
    stream.write(json.dumps(payload, indent=2, sort_keys=True))
    stream.write("\n")


def write_table(table: Table, fmt: str, stream: TextIO, digits: int = DIGITS) -> None:
    if fmt == "csv":
        write_csv(table, stream, digits)
    elif fmt == "json":
        write_json(table, stream, digits)
    else:
        raise DomainError(f"Unknown format '{fmt}', expected one of {FORMATS}")
