import re
from typing import Callable, Optional, Union
import logging


class Regex():
    """re wrapper used to parse the model vocabulary (designators, segment names, CLI values).
    A call that matches or substitutes nothing is a failure: strict calls raise, lenient calls log it.
    Model identifiers are case sensitive, so is matching unless asked otherwise.
    """

    def __init__(self) -> None:
        self.msg = "re.{name} /{pattern}/ {error_msg} on '{string}'"

    def _unexpected_behavior(self, name: str, pattern: str, error_msg: str, string: str, strict: bool) -> None:
        """Reports a call that had no effect.

        Args:
            name (str): re function called
            pattern (str): Pattern of the call
            error_msg (str): What went wrong
            string (str): Input of the call
            strict (bool): Raise instead of logging

        Raises:
            ValueError: strict calls only
        """
        message = self.msg.format(name=name, pattern=pattern, error_msg=error_msg, string=string)
        if strict:
            raise ValueError(message)
        logging.debug(f"[DEBUG] {message}")

    def fullmatch(self, pattern: str, string: str, strict: bool = True, case_sensitive: bool = True) -> Optional[re.Match]:
        """Wrapper for re.fullmatch

        Args:
            pattern (str): Pattern the whole input must match
            string (str): Input
            strict (bool, optional): Raise when the input does not match. Defaults to True.
            case_sensitive (bool, optional): Match without re.IGNORECASE. Defaults to True.

        Returns:
            Optional[re.Match]: Match object, None for a lenient miss
        """
        flags = 0 if case_sensitive else re.IGNORECASE
        match = re.fullmatch(pattern, string, flags=flags)
        if match is None:
            self._unexpected_behavior("fullmatch", pattern, "did not match the whole input", string, strict)
        return match

    def sub(self, pattern: str, repl: Union[str, Callable], string: str, strict: bool = True, case_sensitive: bool = True) -> str:
        """Wrapper for re.sub

        Args:
            pattern (str): Pattern to replace
            repl (Union[str, Callable]): Replacement or replacement function
            string (str): Input
            strict (bool, optional): Raise when nothing was replaced. Defaults to True.
            case_sensitive (bool, optional): Match without re.IGNORECASE. Defaults to True.

        Returns:
            str: Input after substitution
        """
        flags = 0 if case_sensitive else re.IGNORECASE
        replaced = re.sub(pattern, repl, string, flags=flags)
        if replaced == string:
            self._unexpected_behavior("sub", pattern, "replaced nothing", string, strict)
        return replaced
