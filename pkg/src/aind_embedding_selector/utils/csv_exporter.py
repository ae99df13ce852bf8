"""Export histograms, fronts and report tables to CSV for plotting and downstream use."""

import csv
import io
from pathlib import Path
from typing import Any, Iterable, Sequence

from aind_embedding_selector.utils.atomic_io import atomic_write_text


def format_cell(value: Any) -> str:
    """Render one cell; floats use the shortest repr that round-trips, None is empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, frozenset, set)):
        return " ".join(str(v) for v in value)
    return str(value)


def write_rows(output_path: Path, fieldnames: Sequence[str], rows: Iterable[dict]) -> None:
    """Write dict *rows* under a *fieldnames* header to *output_path* atomically.

    Missing keys become empty cells; list-valued cells are space-joined.
    """
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({name: format_cell(row.get(name)) for name in fieldnames})
    atomic_write_text(Path(output_path), buf.getvalue())


def read_rows(path: Path) -> list[dict]:
    """Read a CSV written by :func:`write_rows` back as a list of string dicts."""
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
