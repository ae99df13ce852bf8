"""Tests for models/front_store.py."""

from pathlib import Path

import numpy as np
import pytest

from aind_embedding_selector.engine.retrieval import ObjectiveVector
from aind_embedding_selector.errors import ArchiveError
from aind_embedding_selector.models.front import Individual, ParetoFront
from aind_embedding_selector.models.front_store import FrontRecord, FrontStore


def _front(run_id: int, subsets, d: int = 8, stage: str = "coarse") -> ParetoFront:
    members = []
    for features, error in subsets:
        mask = np.zeros(d, dtype=bool)
        mask[list(features)] = True
        members.append(Individual(
            mask,
            ObjectiveVector(len(features) / d, error, len(features), {"a": 1 - error, "b": 0.5}),
        ))
    return ParetoFront(solutions=members, run_id=run_id, stage=stage, seed=100 + run_id,
                       stage_dim=d, evaluations=40)


def _save(store: FrontStore, fronts) -> None:
    store.save_stage(
        fronts,
        stage="coarse",
        feature_count=8,
        dataset_fingerprint="d" * 64,
        config={"cf": 3},
        config_fingerprint="c" * 64,
    )


class TestFrontRecord:
    def test_mask_must_be_ascending(self) -> None:
        with pytest.raises(ArchiveError):
            FrontRecord(run_id=0, stage="coarse", seed=0, mask=(3, 1),
                        raw_feature_count=2, feature_fraction=0.25, retrieval_error=0.1)

    def test_malformed_dict(self) -> None:
        with pytest.raises(ArchiveError):
            FrontRecord.from_dict({"run_id": 0, "stage": "coarse"})

    def test_index_beyond_dimension(self) -> None:
        record = FrontRecord(run_id=0, stage="coarse", seed=0, mask=(9,),
                             raw_feature_count=1, feature_fraction=0.1, retrieval_error=0.1)
        with pytest.raises(ArchiveError):
            record.to_individual(8)


class TestFrontStore:
    def test_round_trip(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path / "coarse")
        original = [_front(0, [([1], 0.3), ([1, 4], 0.1)]), _front(1, [([2, 5, 7], 0.05)])]
        _save(store, original)

        fronts, manifest = store.load_stage()
        assert [f.run_id for f in fronts] == [0, 1]
        for a, b in zip(original, fronts):
            assert (b.seed, b.stage, b.stage_dim, b.evaluations) == (a.seed, "coarse", 8, 40)
            assert [i.selected_features() for i in b] == [i.selected_features() for i in a]
            assert [i.objectives for i in b] == [i.objectives for i in a]
        assert manifest["feature_count"] == 8
        assert manifest["runs"][1] == {
            "run_id": 1, "seed": 101, "evaluations": 40, "front_size": 1, "file": "run_0001.jsonl"
        }

    def test_resave_is_byte_identical(self, tmp_path: Path) -> None:
        first = FrontStore(tmp_path / "a")
        _save(first, [_front(0, [([0, 3], 0.2)])])
        fronts, _ = first.load_stage()
        second = FrontStore(tmp_path / "b")
        _save(second, fronts)
        for name in ("run_0000.jsonl", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_stale_run_files_removed(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path / "coarse")
        _save(store, [_front(i, [([i], 0.1)]) for i in range(3)])
        _save(store, [_front(0, [([5], 0.1)])])
        fronts, manifest = store.load_stage()
        assert len(fronts) == 1
        assert not (tmp_path / "coarse" / "run_0002.jsonl").exists()
        assert len(manifest["runs"]) == 1

    def test_load_single_run(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path / "coarse")
        _save(store, [_front(0, [([1], 0.3)]), _front(3, [([2, 5], 0.05)])])
        front, manifest = store.load_run(3)
        assert (front.run_id, front.seed, front.evaluations) == (3, 103, 40)
        assert [i.selected_features() for i in front] == [[2, 5]]
        assert manifest["dataset_fingerprint"] == "d" * 64
        with pytest.raises(ArchiveError, match="run 1 not found"):
            store.load_run(1)

    def test_empty_front_is_persisted(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path)
        _save(store, [ParetoFront(run_id=0, stage_dim=8)])
        fronts, _ = store.load_stage()
        assert len(fronts) == 1 and len(fronts[0]) == 0

    def test_missing_directory(self, tmp_path: Path) -> None:
        with pytest.raises(ArchiveError):
            FrontStore(tmp_path / "nothing").load_stage()

    def test_missing_manifest(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path)
        store.save_front(_front(0, [([1], 0.2)]))
        with pytest.raises(ArchiveError):
            store.load_stage()

    def test_inconsistent_records(self, tmp_path: Path) -> None:
        store = FrontStore(tmp_path)
        store.save_front(_front(0, [([1], 0.2)]))
        lines = store.run_file(0).read_text(encoding="utf-8")
        store.run_file(0).write_text(lines + lines.replace('"seed":100', '"seed":7'),
                                     encoding="utf-8")
        with pytest.raises(ArchiveError):
            store.load_front(0, feature_count=8, stage_dim=8)
