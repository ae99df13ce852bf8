"""End-to-end tests for pipeline.py on a small synthetic dataset."""

import json
import shutil
from pathlib import Path

import pytest

from aind_embedding_selector import pipeline
from aind_embedding_selector.config import PipelineConfig
from aind_embedding_selector.errors import (
    ArchiveError,
    ConfigError,
    DatasetValidationError,
    FingerprintMismatchError,
)
from aind_embedding_selector.models.dataset import load_csv
from aind_embedding_selector.models.front_store import FrontStore
from aind_embedding_selector.models.synthetic import SyntheticSpec
from aind_embedding_selector.utils.csv_exporter import read_rows, write_rows


def _tree(root: Path) -> dict:
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestSynth:
    def test_writes_dataset_and_truth(self, tmp_path: Path, small_spec: SyntheticSpec) -> None:
        ds = pipeline.synth(small_spec, tmp_path / "d.csv", tmp_path / "d.truth.json")
        truth = json.loads((tmp_path / "d.truth.json").read_text(encoding="utf-8"))
        assert len(truth["informative_features"]) == 2
        assert truth["class_ids"] == list(ds.class_ids)
        assert truth["dataset_fingerprint"] == load_csv(tmp_path / "d.csv").fingerprint()

    def test_mfv_collapses_patches(self, tmp_path: Path) -> None:
        spec = SyntheticSpec(feature_count=8, informative_count=2, class_count=2,
                             samples_per_split=(2, 1, 1), patches_per_sample=3, seed=1)
        patches = pipeline.synth(spec, tmp_path / "p.csv", tmp_path / "p.json")
        assert patches.sample_count == 24
        out = pipeline.mfv(tmp_path / "p.csv", tmp_path / "mfv.csv")
        assert out.sample_count == 8
        assert load_csv(tmp_path / "mfv.csv").sample_count == 8


class TestStages:
    def test_coarse(self, pipeline_config: PipelineConfig) -> None:
        archive = pipeline.coarse_stage(pipeline_config)
        assert archive.runs == 3
        fronts, manifest = FrontStore(pipeline_config.coarse_dir).load_stage()
        assert [f.run_id for f in fronts] == [0, 1, 2]
        assert [f.seed for f in fronts] == [11, 12, 13]
        assert all(r["evaluations"] == 8 * (3 + 1) for r in manifest["runs"])
        assert manifest["feature_count"] == 16
        for front in fronts:
            assert len(front) >= 1
            assert all(1 <= ind.popcount <= 4 for ind in front)

    def test_ffh(self, pipeline_config: PipelineConfig) -> None:
        pipeline.coarse_stage(pipeline_config)
        h = pipeline.ffh_stage(pipeline_config.coarse_dir, 6,
                               pipeline_config.ffh_file, pipeline_config.ffh_top_file)
        rows = read_rows(pipeline_config.ffh_file)
        assert [int(r["feature_index"]) for r in rows] == list(range(16))
        top = read_rows(pipeline_config.ffh_top_file)
        assert [int(r["rank"]) for r in top] == [1, 2, 3, 4, 5, 6]
        scores = [float(r["score"]) for r in top]
        assert scores == sorted(scores, reverse=True)
        reread = pipeline.read_histogram(pipeline_config.ffh_file)
        assert reread.scores.tolist() == h.scores.tolist()

    def test_ffh_rejects_nff(self, pipeline_config: PipelineConfig) -> None:
        pipeline.coarse_stage(pipeline_config)
        with pytest.raises(ConfigError):
            pipeline.ffh_stage(pipeline_config.coarse_dir, 17,
                               pipeline_config.ffh_file, pipeline_config.ffh_top_file)

    def test_fine_searches_top_features_only(self, pipeline_config: PipelineConfig) -> None:
        pipeline.coarse_stage(pipeline_config)
        pipeline.ffh_stage(pipeline_config.coarse_dir, 6,
                           pipeline_config.ffh_file, pipeline_config.ffh_top_file)
        fronts = pipeline.fine_stage(pipeline_config)
        top = sorted(int(r["feature_index"]) for r in read_rows(pipeline_config.ffh_top_file))
        manifest = FrontStore(pipeline_config.fine_dir).read_manifest()
        assert manifest["feature_subspace"] == top
        assert manifest["stage_dim"] == 6
        assert len(fronts) == 3
        for front in fronts:
            assert front.stage == "fine"
            for ind in front:
                assert set(ind.selected_features()) <= set(top)

    def test_fine_rejects_histogram_of_other_dimension(
        self, pipeline_config: PipelineConfig, tmp_path: Path
    ) -> None:
        path = tmp_path / "short.csv"
        write_rows(path, pipeline.FFH_FIELDS,
                   [{"feature_index": i, "score": 1.0} for i in range(3)])
        with pytest.raises(ArchiveError):
            pipeline.fine_stage(pipeline_config, ffh_path=path)

    def test_read_histogram_checks_order(self, tmp_path: Path) -> None:
        path = tmp_path / "ffh.csv"
        write_rows(path, pipeline.FFH_FIELDS,
                   [{"feature_index": 1, "score": 1.0}, {"feature_index": 0, "score": 0.5}])
        with pytest.raises(ArchiveError):
            pipeline.read_histogram(path)

    def test_missing_dataset(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            pipeline.load_dataset(PipelineConfig(dataset=None, output=tmp_path))

    def test_classes_restrict_every_stage(self, tmp_path: Path) -> None:
        spec = SyntheticSpec(feature_count=12, informative_count=2, class_count=3,
                             samples_per_split=(8, 4, 4), separation=4.0, seed=2)
        full = pipeline.synth(spec, tmp_path / "three.csv", tmp_path / "three.json")
        cfg = PipelineConfig(dataset=tmp_path / "three.csv", output=tmp_path / "out",
                             classes=("class_0", "class_2"), cf=3, nff=4,
                             population_size=8, generations=2, runs=2, seed=1,
                             fine_population_size=8, fine_generations=2)
        ds = pipeline.load_dataset(cfg)
        assert ds.class_ids == ("class_0", "class_2")
        assert ds.sample_count == 2 * (8 + 4 + 4)
        summary = pipeline.run_all(cfg)
        manifest = FrontStore(cfg.coarse_dir).read_manifest()
        assert manifest["dataset_fingerprint"] == ds.fingerprint() != full.fingerprint()
        assert manifest["config"]["classes"] == ["class_0", "class_2"]
        assert summary["class_ids"] == ["class_0", "class_2"]
        best = read_rows(cfg.report_dir / "best_subsets.csv")
        assert "f1_class_2" in best[0] and "f1_class_1" not in best[0]

    def test_unknown_class(self, pipeline_config: PipelineConfig) -> None:
        cfg = PipelineConfig(**{**vars(pipeline_config), "classes": ("class_0", "class_7")})
        with pytest.raises(DatasetValidationError, match="class_7"):
            pipeline.load_dataset(cfg)

    def test_very_coarse_lifts_the_cap(
        self, pipeline_config: PipelineConfig, monkeypatch
    ) -> None:
        seen = []
        real = pipeline.run_coarse_stage

        def recording(ds, cfg, runs, **kwargs):
            seen.append((cfg.cf, runs))
            return real(ds, cfg, runs, **kwargs)

        monkeypatch.setattr(pipeline, "run_coarse_stage", recording)
        front = pipeline.very_coarse_stage(pipeline_config)
        assert seen == [(16, 1)]
        assert front.seed == 11 and front.stage_dim == 16
        manifest = FrontStore(pipeline_config.very_coarse_dir).read_manifest()
        assert manifest["stage"] == "very_coarse"
        assert [r["evaluations"] for r in manifest["runs"]] == [8 * (3 + 1)]

        pipeline.coarse_stage(pipeline_config)
        summary = pipeline.report(pipeline_config)
        assert set(summary["stages"]) == {"coarse"}
        assert summary["very_coarse"] == {
            "evaluations": 32,
            "front_size": len(front),
            "suggested_cf": max(ind.popcount for ind in front),
        }
        assert "suggested_cf" not in summary["stages"]["coarse"]


class TestReport:
    def test_full_run(self, pipeline_config: PipelineConfig) -> None:
        summary = pipeline.run_all(pipeline_config)
        out = pipeline_config.report_dir
        for name in ("best_subsets.csv", "stability.csv", "stability_coarse.csv",
                     "stability_fine.csv", "ordered_selection.csv", "wilcoxon.csv",
                     "single_feature_rank.csv", "fronts_coarse.csv", "fronts_fine.csv",
                     "summary.json"):
            assert (out / name).exists(), name

        best = read_rows(out / "best_subsets.csv")
        assert [r["stage"] for r in best] == ["coarse"] * 3 + ["fine"] * 3
        assert set(best[0]) >= {"f1_class_0", "f1_class_1", "macro_f1", "features"}

        assert set(summary["stages"]) == {"coarse", "fine"}
        for stage in ("coarse", "fine"):
            s = summary["stages"][stage]
            assert s["runs"] == 3
            assert 0.0 <= s["stability"] <= 1.0
            assert s["compression_ratio"] >= 1.0
        assert summary["split"] == "test"
        assert summary["feature_count"] == 16

        rows = read_rows(out / "wilcoxon.csv")
        comparisons = [r["comparison"] for r in rows]
        assert comparisons == (["fine_vs_coarse"] * 3 + ["coarse_vs_ordered"] * 3
                               + ["fine_vs_ordered"] * 3)
        assert [r["class"] for r in rows[:3]] == ["macro", "class_0", "class_1"]
        assert "very_coarse" not in summary
        assert len(read_rows(out / "stability_coarse.csv")) == 3
        assert len(read_rows(out / "single_feature_rank.csv")) == 6
        assert sorted(p.name for p in (out / "decision_space").iterdir()) == [
            "coarse_class_0.csv", "coarse_class_1.csv", "fine_class_0.csv", "fine_class_1.csv",
        ]

    def test_reruns_are_byte_identical(
        self, pipeline_config: PipelineConfig, tmp_path: Path
    ) -> None:
        pipeline.run_all(pipeline_config)
        other = PipelineConfig(**{**vars(pipeline_config), "output": tmp_path / "again"})
        pipeline.run_all(other)
        assert _tree(pipeline_config.output) == _tree(tmp_path / "again")

    def test_coarse_only(self, pipeline_config: PipelineConfig) -> None:
        pipeline.coarse_stage(pipeline_config)
        summary = pipeline.report(pipeline_config, split="validation")
        assert set(summary["stages"]) == {"coarse"}
        assert read_rows(pipeline_config.report_dir / "wilcoxon.csv")[0]["comparison"] == (
            "coarse_vs_ordered"
        )

    def test_stale_stage_files_are_removed(self, pipeline_config: PipelineConfig) -> None:
        pipeline.run_all(pipeline_config)
        out = pipeline_config.report_dir
        assert (out / "fronts_fine.csv").exists()
        shutil.rmtree(pipeline_config.fine_dir)
        pipeline.report(pipeline_config)
        leftovers = [p.name for p in out.rglob("*") if "fine" in p.name]
        assert leftovers == []
        assert (out / "fronts_coarse.csv").exists()
        assert {r["stage"] for r in read_rows(out / "best_subsets.csv")} == {"coarse"}

    def test_refuses_other_dataset(self, pipeline_config: PipelineConfig, line_dataset) -> None:
        pipeline.coarse_stage(pipeline_config)
        with pytest.raises(FingerprintMismatchError):
            pipeline.report(pipeline_config, ds=line_dataset)

    def test_requires_archive(self, pipeline_config: PipelineConfig) -> None:
        with pytest.raises(ArchiveError):
            pipeline.report(pipeline_config)


class TestExport:
    def test_masked_features(self, pipeline_config: PipelineConfig, tmp_path: Path) -> None:
        pipeline.coarse_stage(pipeline_config)
        ds = pipeline.load_dataset(pipeline_config)
        path = tmp_path / "masked.csv"
        features = pipeline.export(ds, pipeline_config.coarse_dir, 1, path, split="test")
        rows = read_rows(path)
        assert len(rows) == 8
        assert list(rows[0]) == [f"f{i}" for i in features] + ["label", "split"]
        assert {r["split"] for r in rows} == {"test"}
        assert 1 <= len(features) <= 4

    def test_unknown_run(self, pipeline_config: PipelineConfig, tmp_path: Path) -> None:
        pipeline.coarse_stage(pipeline_config)
        ds = pipeline.load_dataset(pipeline_config)
        with pytest.raises(ArchiveError):
            pipeline.export(ds, pipeline_config.coarse_dir, 9, tmp_path / "x.csv")
