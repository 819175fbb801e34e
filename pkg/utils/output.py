"""
Deterministic file output: fixed float format, LF line endings, atomic writes
"""

import csv
import io
import logging
import numbers
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

log = logging.getLogger(__name__)


def format_float(value: Any) -> str:
    """17 significant digits in scientific notation for reals, plain digits for integers."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        x = float(value)
        if x != x:
            return "nan"
        return f"{x:.16e}"
    return str(value)


def atomic_write_text(path: Path, text: str) -> Path:
    """
    Write text through a temporary file in the same directory, then rename.

    Args:
        path: Destination file
        text: Full file contents

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    log.debug("Wrote %s", path)
    return path


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table atomically with the fixed float format."""
    return atomic_write_text(path, render_csv(header, rows))
