"""Discovers and indexes run_xxxx.jsonl front files under a stage directory."""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

# Matches run_0000.jsonl, run_0042.jsonl, run_12345.jsonl, etc.
_RUN_PATTERN = re.compile(r"^run_(\d{4,})\.jsonl$")


def run_file_name(run_id: int) -> str:
    return f"run_{run_id:04d}.jsonl"


@dataclass(frozen=True)
class RunFileInfo:
    """Location of one run's persisted front."""

    run_id: int
    path: Path


class ArchiveRegistry:
    """Scans *stage_dir* and builds the list of run files ordered by run ID.

    Call scan() once before use; re-call if the directory changes.
    """

    def __init__(self, stage_dir: Path) -> None:
        self._stage_dir = Path(stage_dir)
        self._runs: list[RunFileInfo] = []

    @property
    def stage_dir(self) -> Path:
        return self._stage_dir

    def scan(self) -> None:
        """Populate the run list from the filesystem (non-recursive)."""
        self._runs = []
        if not self._stage_dir.is_dir():
            return
        for entry in self._stage_dir.iterdir():
            match = _RUN_PATTERN.match(entry.name)
            if match and entry.is_file():
                self._runs.append(RunFileInfo(run_id=int(match.group(1)), path=entry))
        self._runs.sort(key=lambda r: r.run_id)

    def all_runs(self) -> list:
        return list(self._runs)

    def get_run(self, run_id: int) -> Optional[RunFileInfo]:
        """Return the RunFileInfo for *run_id*, or None if not found."""
        for r in self._runs:
            if r.run_id == run_id:
                return r
        return None

    def run_count(self) -> int:
        return len(self._runs)
