"""
Formatting utilities for the interaction toolkit.

Provides JSON formatting, rich console tables and atomic file output.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from app.utils.logging import to_loggable


def format_json(data: Any, indent: int = 2) -> str:
    """
    Format data as pretty-printed JSON.

    Args:
        data: Data to format (numpy values are converted)
        indent: Indentation level

    Returns:
        Formatted JSON string
    """
    return json.dumps(to_loggable(data), indent=indent, default=str, ensure_ascii=False)


def format_duration(seconds: float) -> str:
    """
    Format duration in seconds as human-readable string.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration (e.g., "2m 30s", "1h 15m")
    """
    if seconds < 60:
        return f"{seconds:.2f}s"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        secs = int(seconds % 60)
        return f"{minutes}m {secs}s"
    else:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        return f"{hours}h {minutes}m"


def create_table(
    title: str,
    columns: list[str],
    rows: list[list[Any]],
) -> Table:
    """
    Create a Rich table for console output.

    Args:
        title: Table title
        columns: Column headers
        rows: Table rows

    Returns:
        Rich Table object
    """
    table = Table(title=title, show_header=True, header_style="bold magenta")

    for column in columns:
        table.add_column(column)

    for row in rows:
        table.add_row(*[str(cell) for cell in row])

    return table


def print_table(table: Table, quiet: bool = False) -> None:
    """Print a table to stdout unless quiet."""
    if quiet:
        return
    Console().print(table)


def write_atomic(path: Path, content: str | bytes) -> Path:
    """
    Write a file by writing a sibling temp file and renaming it into place.

    Args:
        path: Destination path
        content: Text (written as UTF-8) or bytes

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = content.encode("utf-8") if isinstance(content, str) else content
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
