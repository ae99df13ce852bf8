"""Tests for utils/atomic_io.py."""

import json
from pathlib import Path

from aind_embedding_selector.utils.atomic_io import (
    atomic_write_json,
    atomic_write_jsonl,
    read_json,
    read_jsonl,
)


def test_round_trip(tmp_path: Path) -> None:
    """Written data can be read back."""
    target = tmp_path / "test.json"
    data = {"key": "value", "num": 42, "list": [1, 2, 3]}
    atomic_write_json(target, data)
    result = read_json(target)
    assert result == data


def test_atomic_write_creates_parent_dirs(tmp_path: Path) -> None:
    """atomic_write_json creates missing intermediate directories."""
    target = tmp_path / "a" / "b" / "c" / "file.json"
    atomic_write_json(target, {"x": 1})
    assert target.exists()


def test_atomic_write_leaves_no_tmp_files(tmp_path: Path) -> None:
    """No .tmp files should remain after a successful write."""
    target = tmp_path / "out.json"
    atomic_write_json(target, {"ok": True})
    tmp_files = list(tmp_path.glob("*.tmp")) + list(tmp_path.glob(".*.tmp"))
    assert tmp_files == [], f"Found leftover tmp files: {tmp_files}"


def test_read_json_returns_none_for_missing(tmp_path: Path) -> None:
    """read_json returns None when the file does not exist."""
    assert read_json(tmp_path / "nonexistent.json") is None
    assert read_jsonl(tmp_path / "nonexistent.jsonl") is None


def test_atomic_write_overwrites_existing(tmp_path: Path) -> None:
    """Writing twice replaces the file contents completely."""
    target = tmp_path / "data.json"
    atomic_write_json(target, {"v": 1})
    atomic_write_json(target, {"v": 2})
    assert read_json(target) == {"v": 2}


def test_json_is_canonical(tmp_path: Path) -> None:
    """Key order in the input does not change the bytes written."""
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    atomic_write_json(a, {"z": 1, "a": [1.5, 2]})
    atomic_write_json(b, {"a": [1.5, 2], "z": 1})
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text(encoding="utf-8").endswith("\n")


def test_jsonl_one_record_per_line(tmp_path: Path) -> None:
    target = tmp_path / "run.jsonl"
    atomic_write_jsonl(target, [{"b": 2, "a": 1}, {"a": 3}])
    lines = target.read_text(encoding="utf-8").splitlines()
    assert lines == ['{"a":1,"b":2}', '{"a":3}']
    assert read_jsonl(target) == [{"a": 1, "b": 2}, {"a": 3}]


def test_read_jsonl_skips_blank_lines(tmp_path: Path) -> None:
    target = tmp_path / "run.jsonl"
    target.write_text(json.dumps({"a": 1}) + "\n\n", encoding="utf-8")
    assert read_jsonl(target) == [{"a": 1}]
