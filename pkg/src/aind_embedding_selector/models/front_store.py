"""JSON-lines persistence of fronts, one file per run, plus a per-stage manifest.

Front file ({stage_dir}/run_{id}.jsonl), one record per front member:

    {"feature_fraction": 0.0390625, "mask": [3, 17, 40], "per_class_f1": {"A": 0.9, ...},
     "raw_feature_count": 3, "retrieval_error": 0.05, "run_id": 0, "seed": 7,
     "stage": "coarse"}

``mask`` lists the selected original-space feature indices, strictly
ascending. Manifest ({stage_dir}/manifest.json):

    {
      "stage": "coarse",
      "feature_count": 1024,
      "stage_dim": 1024,
      "dataset_fingerprint": "<sha256>",
      "config_fingerprint": "<sha256>",
      "config": {...},
      "feature_subspace": null | [..],
      "runs": [{"run_id": 0, "seed": 7, "evaluations": 51000,
                "front_size": 12, "file": "run_0000.jsonl"}, ...]
    }
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from aind_embedding_selector.engine.retrieval import ObjectiveVector
from aind_embedding_selector.errors import ArchiveError
from aind_embedding_selector.models.archive_registry import ArchiveRegistry, run_file_name
from aind_embedding_selector.models.front import Individual, ParetoFront
from aind_embedding_selector.utils.atomic_io import (
    atomic_write_json,
    atomic_write_jsonl,
    read_json,
    read_jsonl,
)

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class FrontRecord:
    """One persisted front member."""

    run_id: int
    stage: str
    seed: int
    mask: tuple
    raw_feature_count: int
    feature_fraction: float
    retrieval_error: float
    per_class_f1: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        mask = tuple(int(i) for i in self.mask)
        if any(b <= a for a, b in zip(mask, mask[1:])):
            raise ArchiveError(f"mask indices must be strictly ascending: {list(mask)}")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_individual(cls, ind: Individual, front: ParetoFront) -> "FrontRecord":
        obj = ind.objectives
        return cls(
            run_id=front.run_id,
            stage=front.stage,
            seed=front.seed,
            mask=tuple(ind.selected_features()),
            raw_feature_count=obj.raw_feature_count,
            feature_fraction=obj.feature_fraction,
            retrieval_error=obj.retrieval_error,
            per_class_f1=dict(obj.per_class_f1),
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "FrontRecord":
        try:
            return cls(
                run_id=int(raw["run_id"]),
                stage=str(raw["stage"]),
                seed=int(raw["seed"]),
                mask=tuple(raw["mask"]),
                raw_feature_count=int(raw["raw_feature_count"]),
                feature_fraction=float(raw["feature_fraction"]),
                retrieval_error=float(raw["retrieval_error"]),
                per_class_f1={str(k): float(v) for k, v in raw["per_class_f1"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ArchiveError(f"malformed front record: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mask"] = list(self.mask)
        return d

    def to_individual(self, feature_count: int) -> Individual:
        mask = np.zeros(feature_count, dtype=bool)
        if self.mask:
            if self.mask[-1] >= feature_count:
                raise ArchiveError(f"mask index {self.mask[-1]} exceeds D={feature_count}")
            mask[list(self.mask)] = True
        return Individual(
            mask,
            ObjectiveVector(
                feature_fraction=self.feature_fraction,
                retrieval_error=self.retrieval_error,
                raw_feature_count=self.raw_feature_count,
                per_class_f1=dict(self.per_class_f1),
            ),
        )


class FrontStore:
    """Reads and writes the fronts and manifest of one stage directory."""

    def __init__(self, stage_dir: Path) -> None:
        self._stage_dir = Path(stage_dir)

    @property
    def stage_dir(self) -> Path:
        return self._stage_dir

    @property
    def manifest_file(self) -> Path:
        return self._stage_dir / MANIFEST_NAME

    def run_file(self, run_id: int) -> Path:
        return self._stage_dir / run_file_name(run_id)

    # ------------------------------------------------------------------
    # Fronts
    # ------------------------------------------------------------------

    def save_front(self, front: ParetoFront) -> Path:
        """Persist *front* as JSON lines; returns the file written."""
        path = self.run_file(front.run_id)
        atomic_write_jsonl(
            path, (FrontRecord.from_individual(ind, front).to_dict() for ind in front)
        )
        return path

    def load_records(self, run_id: int) -> list[FrontRecord]:
        raw = read_jsonl(self.run_file(run_id))
        if raw is None:
            raise ArchiveError(f"front file not found: {self.run_file(run_id)}")
        return [FrontRecord.from_dict(r) for r in raw]

    def load_front(
        self, run_id: int, feature_count: int, stage_dim: int, evaluations: int = 0
    ) -> ParetoFront:
        records = self.load_records(run_id)
        stages = {r.stage for r in records}
        seeds = {r.seed for r in records}
        if len(stages) > 1 or len(seeds) > 1 or any(r.run_id != run_id for r in records):
            raise ArchiveError(f"inconsistent records in {self.run_file(run_id)}")
        return ParetoFront(
            solutions=[r.to_individual(feature_count) for r in records],
            run_id=run_id,
            stage=stages.pop() if stages else "coarse",
            seed=seeds.pop() if seeds else 0,
            stage_dim=stage_dim,
            evaluations=evaluations,
        )

    # ------------------------------------------------------------------
    # Manifest
    # ------------------------------------------------------------------

    def write_manifest(
        self,
        stage: str,
        fronts: Sequence[ParetoFront],
        feature_count: int,
        dataset_fingerprint: str,
        config: dict,
        config_fingerprint: str,
        feature_subspace: Optional[Sequence[int]] = None,
    ) -> None:
        stage_dims = {f.stage_dim for f in fronts}
        manifest = {
            "stage": stage,
            "feature_count": int(feature_count),
            "stage_dim": stage_dims.pop() if len(stage_dims) == 1 else None,
            "dataset_fingerprint": dataset_fingerprint,
            "config_fingerprint": config_fingerprint,
            "config": config,
            "feature_subspace": (
                [int(i) for i in feature_subspace] if feature_subspace is not None else None
            ),
            "runs": [
                {
                    "run_id": f.run_id,
                    "seed": f.seed,
                    "evaluations": f.evaluations,
                    "front_size": len(f),
                    "file": run_file_name(f.run_id),
                }
                for f in sorted(fronts, key=lambda f: f.run_id)
            ],
        }
        atomic_write_json(self.manifest_file, manifest)

    def read_manifest(self) -> dict:
        manifest = read_json(self.manifest_file)
        if manifest is None:
            raise ArchiveError(f"manifest not found: {self.manifest_file}")
        return manifest

    # ------------------------------------------------------------------
    # Whole stage
    # ------------------------------------------------------------------

    def save_stage(self, fronts: Sequence[ParetoFront], **manifest_fields) -> None:
        """Write every front, then the manifest (so a manifest implies complete fronts).

        Run files left over from an earlier, larger stage are removed.
        """
        self._stage_dir.mkdir(parents=True, exist_ok=True)
        keep = {front.run_id for front in fronts}
        registry = ArchiveRegistry(self._stage_dir)
        registry.scan()
        for info in registry.all_runs():
            if info.run_id not in keep:
                info.path.unlink()
        for front in fronts:
            self.save_front(front)
        self.write_manifest(fronts=fronts, **manifest_fields)

    def _load_listed(self, run_id: int, manifest: dict) -> ParetoFront:
        evaluations = {r["run_id"]: r.get("evaluations", 0) for r in manifest.get("runs", [])}
        return self.load_front(
            run_id,
            feature_count=manifest["feature_count"],
            stage_dim=manifest.get("stage_dim") or manifest["feature_count"],
            evaluations=evaluations.get(run_id, 0),
        )

    def load_stage(self) -> tuple[list[ParetoFront], dict]:
        """Load every run file listed in the directory, with the stage manifest.

        Raises
        ------
        ArchiveError
            No front file is present or the manifest is missing.
        """
        registry = ArchiveRegistry(self._stage_dir)
        registry.scan()
        if registry.run_count() == 0:
            raise ArchiveError(f"no front files in {self._stage_dir}")
        manifest = self.read_manifest()
        fronts = [self._load_listed(info.run_id, manifest) for info in registry.all_runs()]
        return fronts, manifest

    def load_run(self, run_id: int) -> tuple[ParetoFront, dict]:
        """Load a single run's front with the stage manifest."""
        registry = ArchiveRegistry(self._stage_dir)
        registry.scan()
        if registry.get_run(run_id) is None:
            raise ArchiveError(f"run {run_id} not found in {self._stage_dir}")
        manifest = self.read_manifest()
        return self._load_listed(run_id, manifest), manifest
