"""Atomic text/JSON persistence for run outputs.

Every front file, manifest and report goes through this module so that a
crashed or concurrently running pipeline never leaves a half-written file
behind. The strategy:
  1. Write to a UUID-suffixed temp file in the target directory (same filesystem).
  2. fsync the temp file.
  3. os.replace() atomically renames temp → target.
  4. fsync the directory fd so the rename is durable.

JSON is always written with sorted keys and a trailing newline so reruns with
the same inputs produce byte-identical files.
"""

import json
import os
import time
import uuid
from pathlib import Path
from typing import Any, Iterable, Optional


def atomic_write_text(filepath: Path, text: str) -> None:
    """Write *text* to *filepath* atomically (UTF-8, ``\\n`` line endings).

    The target file is either fully replaced or left untouched on failure.
    """
    filepath = Path(filepath)
    dirpath = filepath.parent
    dirpath.mkdir(parents=True, exist_ok=True)

    # Unique suffix prevents collisions when two runs write concurrently.
    tmp_path = dirpath / f".{filepath.stem}_{uuid.uuid4().hex}.tmp"

    try:
        with open(tmp_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())

        os.replace(tmp_path, filepath)

        try:
            dir_fd = os.open(str(dirpath), os.O_RDONLY)
            try:
                os.fsync(dir_fd)
            except OSError:
                # Some networked filesystems return EINVAL for fsync on dir fd.
                pass
            finally:
                os.close(dir_fd)
        except OSError:
            pass  # Non-critical: rename already succeeded

    except Exception:
        if tmp_path.exists():
            try:
                tmp_path.unlink()
            except OSError:
                pass
        raise


def dumps_json(data: Any) -> str:
    """Canonical JSON text used for every persisted document."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write_json(filepath: Path, data: Any) -> None:
    """Write *data* as canonical JSON to *filepath* atomically."""
    atomic_write_text(filepath, dumps_json(data))


def atomic_write_jsonl(filepath: Path, records: Iterable[Any]) -> None:
    """Write one compact JSON document per line to *filepath* atomically."""
    lines = [json.dumps(rec, sort_keys=True, separators=(",", ":")) for rec in records]
    atomic_write_text(filepath, "".join(line + "\n" for line in lines))


def _read_with_retry(filepath: Path, parse):
    filepath = Path(filepath)
    last_exc: Optional[Exception] = None

    for attempt in range(3):
        try:
            if not filepath.exists():
                return None
            with open(filepath, "r", encoding="utf-8") as fh:
                return parse(fh)
        except (json.JSONDecodeError, OSError) as exc:
            last_exc = exc
            if attempt < 2:
                time.sleep(0.05 * (attempt + 1))

    raise RuntimeError(f"Failed to read {filepath} after 3 attempts") from last_exc


def read_json(filepath: Path) -> Optional[Any]:
    """Read JSON from *filepath*, returning None if the file does not exist.

    Retries up to 3 times on transient OSError / JSONDecodeError (e.g. a rename
    in progress from another process).
    """
    return _read_with_retry(filepath, json.load)


def read_jsonl(filepath: Path) -> Optional[list]:
    """Read a JSON-lines file into a list of documents, or None if it does not exist.

    Blank lines are ignored.
    """
    return _read_with_retry(
        filepath, lambda fh: [json.loads(line) for line in fh if line.strip()]
    )
