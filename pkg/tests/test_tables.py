"""CSV and JSON result tables."""
from __future__ import annotations

from io import StringIO
import json

import numpy as np
import pytest

from fermikit.errors import DomainError
from fermikit.tables import Table, format_number, write_table


def _table() -> Table:
    table = Table(("s", "cdf"), config={"command": "rightmost", "settings": {"tol": 1e-10, "order": None}})
    table.add(np.float64(0.5), 0.1 + 0.2)
    table.add(1, np.float64(1.0))
    return table


def test_format_number():
    assert format_number(0.1 + 0.2) == "0.30000000000000004"
    assert format_number(np.int64(3)) == "3"
    assert format_number(True) == "true"
    assert format_number([1.5, 2]) == "1.5 2"
    assert format_number(1.0 - 2.0j) == "1-2j"


def test_csv_has_config_header():
    buffer = StringIO()
    write_table(_table(), "csv", buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[:3] == ["# command: rightmost", "# settings.order: null", "# settings.tol: 1e-10"]
    assert lines[3] == "s,cdf"
    assert lines[4] == "0.5,0.30000000000000004"
    assert lines[5] == "1,1"


def test_json_payload():
    buffer = StringIO()
    write_table(_table(), "json", buffer)
    payload = json.loads(buffer.getvalue())
    assert payload["config"]["command"] == "rightmost"
    assert payload["rows"] == [{"s": 0.5, "cdf": 0.30000000000000004}, {"s": 1, "cdf": 1.0}]


def test_complex_values_in_json():
    table = Table(("z",))
    table.add(0.5 - 0.25j)
    buffer = StringIO()
    write_table(table, "json", buffer)
    assert json.loads(buffer.getvalue())["rows"] == [{"z": {"re": 0.5, "im": -0.25}}]


def test_row_length_and_format_errors():
    table = Table(("a", "b"))
    with pytest.raises(DomainError):
        table.add(1)
    with pytest.raises(DomainError):
        write_table(table, "xml", StringIO())
