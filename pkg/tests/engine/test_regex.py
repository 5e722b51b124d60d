import logging
import pytest
from typing import Callable, Optional, Union
from metro_energy.engine import regex


def test_unexpected_behavior_lenient(caplog) -> None:
    caplog.set_level(logging.DEBUG)
    regex.Regex()._unexpected_behavior("fullmatch", r"\d+", "did not match the whole input", "abc", strict=False)
    assert caplog.records[-1].getMessage() == r"[DEBUG] re.fullmatch /\d+/ did not match the whole input on 'abc'"


@pytest.mark.parametrize(['pattern', 'string', 'strict', 'case_sensitive', 'expected'], [
    (r"custom\((?P<label>[a-z-]+)\)", "custom(ce-pe)", True, True, "custom(ce-pe)"),
    (r"r-s", "R-S", True, False, "R-S"),
    (r"r-s", "R-S", False, True, None),
    (r"\d+", "1614556800Z", False, True, None)
])
def test_fullmatch(pattern: str, string: str, strict: bool, case_sensitive: bool, expected: Optional[str]) -> None:
    match = regex.Regex().fullmatch(pattern, string, strict=strict, case_sensitive=case_sensitive)
    assert (match.group(0) if match else None) == expected


def test_fullmatch_ValueError() -> None:
    with pytest.raises(ValueError, match="did not match the whole input on 'S1'"):
        regex.Regex().fullmatch(r"S", "S1")


@pytest.mark.parametrize(['pattern', 'repl', 'string', 'strict', 'case_sensitive', 'expected'], [
    (r"Z$", "+00:00", "2021-03-01T00:00:00Z", True, True, "2021-03-01T00:00:00+00:00"),
    (r"z$", "+00:00", "2021-03-01T00:00:00", False, False, "2021-03-01T00:00:00"),
    (r"\[(\d+)\]", lambda match: f"[{int(match.group(1)) + 1}]", "elements[1]", True, False, "elements[2]")
])
def test_sub(pattern: str, repl: Union[str, Callable], string: str, strict: bool, case_sensitive: bool, expected: str) -> None:
    assert regex.Regex().sub(pattern, repl, string, strict=strict, case_sensitive=case_sensitive) == expected


def test_sub_ValueError() -> None:
    with pytest.raises(ValueError, match="replaced nothing"):
        regex.Regex().sub(r"U1", "T", "rp-u")
