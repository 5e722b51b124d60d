import json
from typing import Any, List, Sequence


class Formatter():
    def __init__(self, indent: int = 2, column_separator: str = "  ", float_digits: int = 3):
        self.indent = indent
        self.column_separator = column_separator
        self.float_digits = float_digits

    def format_json(self, payload: Any) -> str:
        """Renders a payload as canonical JSON to harmonize machine output.
        Default formatting convention:
        - 2 space indent
        - keys kept in insertion order (callers build them in a fixed order)
        - non ASCII characters kept as is
        - non finite numbers refused (ValueError)
        - trailing newline

        Args:
            payload (Any): JSON serializable object

        Returns:
            str: Formatted JSON
        """
        return json.dumps(payload, indent=self.indent, ensure_ascii=False, allow_nan=False) + "\n"

    def format_cell(self, value: Any) -> str:
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float):
            return f"{value:.{self.float_digits}f}"
        if value is None:
            return "-"
        if isinstance(value, (list, tuple)):
            return ",".join(self.format_cell(v) for v in value) if value else "-"
        return str(value)

    def format_table(self, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """Aligned column text for human output. Numbers are right aligned, everything else left aligned.

        Args:
            headers (Sequence[str]): Column titles
            rows (Sequence[Sequence[Any]]): One sequence of cells per row, same length as headers

        Returns:
            str: Table, newline terminated
        """
        cells = [[self.format_cell(value) for value in row] for row in rows]
        numeric = [
            bool(rows) and all(isinstance(row[i], (int, float)) and not isinstance(row[i], bool) for row in rows)
            for i in range(len(headers))
        ]
        widths = [max([len(header)] + [len(row[i]) for row in cells]) for i, header in enumerate(headers)]

        def render(row: List[str]) -> str:
            padded = [cell.rjust(widths[i]) if numeric[i] else cell.ljust(widths[i]) for i, cell in enumerate(row)]
            return self.column_separator.join(padded).rstrip()

        lines = [render(list(headers)), render(["-" * width for width in widths])]
        lines.extend(render(row) for row in cells)
        return "\n".join(lines) + "\n"
