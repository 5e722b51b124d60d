import pytest
from typing import Any
from metro_energy.engine.text_format import Formatter


@pytest.mark.parametrize(['value', 'expected'], [
    (True, "yes"),
    (False, "no"),
    (1.23456, "1.235"),
    (42, "42"),
    (None, "-"),
    (["provide-power", "expand-space"], "provide-power,expand-space"),
    ([], "-"),
    ("seg-core", "seg-core")
])
def test_format_cell(value: Any, expected: str) -> None:
    assert Formatter().format_cell(value) == expected


def test_format_table() -> None:
    table = Formatter().format_table(["segment", "energy_wh"], [["seg-core", 1150.0], ["seg-cust-a", 50.0]])
    assert table == (
        "segment     energy_wh\n"
        "----------  ---------\n"
        "seg-core     1150.000\n"
        "seg-cust-a     50.000\n"
    )


def test_format_table_empty() -> None:
    assert Formatter().format_table(["id", "description"], []) == "id  description\n--  -----------\n"


def test_format_json() -> None:
    assert Formatter().format_json({"b": 1, "a": ["é"]}) == '{\n  "b": 1,\n  "a": [\n    "é"\n  ]\n}\n'


def test_format_json_ValueError() -> None:
    with pytest.raises(ValueError):
        Formatter().format_json({"total_wh": float("nan")})
