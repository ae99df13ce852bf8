"""Stage orchestration: coarse ×R → FFH → fine ×R → report, under one output directory.

Every function here reads and writes through :class:`FrontStore` and the CSV
exporter so each stage can be re-run on its own from the CLI. Nothing
written carries a timestamp; identical config and seed give identical files.
"""

from __future__ import annotations

import logging
import re
import shutil
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from aind_embedding_selector.analysis.decision_space import decision_space
from aind_embedding_selector.analysis.ranking import single_feature_rank
from aind_embedding_selector.analysis.significance import (
    SignedRankResult,
    per_class_wilcoxon,
    signed_rank_test,
)
from aind_embedding_selector.analysis.stability import stability_report
from aind_embedding_selector.analysis.subsets import best_subset, pooled_front, suggest_cf
from aind_embedding_selector.config import PipelineConfig
from aind_embedding_selector.engine.innovization import (
    FreqHistogram,
    RunArchive,
    build_histogram,
    fine_search,
    histogram_from_scores,
    histogram_rows,
    ordered_selection,
    run_coarse_stage,
    top_features,
)
from aind_embedding_selector.engine.retrieval import all_features_baseline, evaluate_mask
from aind_embedding_selector.errors import (
    ArchiveError,
    ConfigError,
    UndefinedInputError,
)
from aind_embedding_selector.models.dataset import (
    ColumnSchema,
    FeatureDataset,
    load_csv,
    mean_feature_vectors,
    save_csv,
)
from aind_embedding_selector.models.front import STAGES, Individual, ParetoFront
from aind_embedding_selector.models.front_store import FrontStore
from aind_embedding_selector.models.synthetic import SyntheticSpec, factor_groups, synthesize
from aind_embedding_selector.utils.atomic_io import atomic_write_json
from aind_embedding_selector.utils.csv_exporter import read_rows, write_rows
from aind_embedding_selector.utils.fingerprint import config_fingerprint

logger = logging.getLogger(__name__)

FFH_FIELDS = ("feature_index", "score")
FFH_TOP_FIELDS = ("rank", "feature_index", "score")

_UNSAFE_NAME = re.compile(r"[^A-Za-z0-9_.-]")


# ----------------------------------------------------------------------
# Datasets
# ----------------------------------------------------------------------


def load_dataset(cfg: PipelineConfig, schema: ColumnSchema = ColumnSchema()) -> FeatureDataset:
    if cfg.dataset is None:
        raise ConfigError("no dataset configured (set 'dataset' or EMBSEL_DATASET)")
    ds = load_csv(cfg.dataset, schema)
    if cfg.classes is not None:
        ds = ds.restrict_classes(cfg.classes)
    logger.info(
        "Loaded %s: %d samples, D=%d, classes=%s",
        cfg.dataset, ds.sample_count, ds.feature_count, list(ds.class_ids),
    )
    return ds


def synth(spec: SyntheticSpec, dataset_path: Path, truth_path: Path) -> FeatureDataset:
    """Write a synthetic dataset CSV and its ground truth (planted features) as JSON."""
    ds, informative = synthesize(spec)
    save_csv(ds, dataset_path)
    atomic_write_json(
        truth_path,
        {
            "informative_features": [int(i) for i in informative],
            "factors": factor_groups(spec),
            "class_ids": list(ds.class_ids),
            "dataset_fingerprint": ds.fingerprint(),
            "spec": spec.to_dict(),
        },
    )
    return ds


def mfv(
    dataset_path: Path, output_path: Path, schema: ColumnSchema = ColumnSchema()
) -> FeatureDataset:
    """Aggregate a patch-level CSV into one mean feature vector per group."""
    aggregated = mean_feature_vectors(load_csv(dataset_path, schema))
    save_csv(aggregated, output_path)
    logger.info("Wrote %d mean feature vectors to %s", aggregated.sample_count, output_path)
    return aggregated


# ----------------------------------------------------------------------
# Stages
# ----------------------------------------------------------------------


def load_archive(stage_dir: Path) -> tuple[RunArchive, dict]:
    """Read a persisted stage back as an archive plus its manifest."""
    fronts, manifest = FrontStore(stage_dir).load_stage()
    archive = RunArchive(
        fronts=fronts,
        dataset_fingerprint=manifest.get("dataset_fingerprint"),
        config_fingerprint=manifest.get("config_fingerprint"),
    )
    return archive, manifest


def coarse_stage(cfg: PipelineConfig, ds: Optional[FeatureDataset] = None) -> RunArchive:
    """Run R constrained searches over all features and persist their fronts."""
    cfg.validate()
    ds = ds if ds is not None else load_dataset(cfg)
    engine_cfg = cfg.coarse_config(ds.feature_count)
    logger.info(
        "Coarse stage: R=%d, D=%d, CF=%d, NP=%d, generations=%d",
        cfg.runs, ds.feature_count, engine_cfg.cf, engine_cfg.population_size,
        engine_cfg.max_generations,
    )
    archive = run_coarse_stage(ds, engine_cfg, cfg.runs, base_seed=cfg.seed, workers=cfg.workers)
    archive.config_fingerprint = config_fingerprint(cfg.to_dict())
    FrontStore(cfg.coarse_dir).save_stage(
        archive.fronts,
        stage="coarse",
        feature_count=ds.feature_count,
        dataset_fingerprint=archive.dataset_fingerprint,
        config=cfg.to_dict(),
        config_fingerprint=archive.config_fingerprint,
    )
    logger.info("Coarse fronts written to %s", cfg.coarse_dir)
    return archive


def very_coarse_stage(cfg: PipelineConfig, ds: Optional[FeatureDataset] = None) -> ParetoFront:
    """One search over all features with the CF cap lifted (CF = D).

    The largest subset on its front is the data-driven CF suggestion that
    :func:`report` publishes; it is written to ``cfg.very_coarse_dir``.
    """
    cfg.validate()
    ds = ds if ds is not None else load_dataset(cfg)
    engine_cfg = cfg.coarse_config(ds.feature_count).with_overrides(cf=ds.feature_count)
    logger.info(
        "Very coarse run: D=%d, NP=%d, generations=%d (no feature cap)",
        ds.feature_count, engine_cfg.population_size, engine_cfg.max_generations,
    )
    archive = run_coarse_stage(ds, engine_cfg, runs=1, base_seed=cfg.seed)
    FrontStore(cfg.very_coarse_dir).save_stage(
        archive.fronts,
        stage="very_coarse",
        feature_count=ds.feature_count,
        dataset_fingerprint=archive.dataset_fingerprint,
        config=cfg.to_dict(),
        config_fingerprint=config_fingerprint(cfg.to_dict()),
    )
    front = archive.fronts[0]
    if len(front):
        logger.info("Very coarse front keeps at most %d features", suggest_cf(front))
    return front


def ffh_stage(
    stage_dir: Path, nff: int, ffh_path: Path, top_path: Path
) -> FreqHistogram:
    """Score every feature over the fronts in *stage_dir* and write both FFH files.

    *ffh_path* gets one row per feature by ascending index; *top_path* gets the
    *nff* highest-scoring features in score order.
    """
    archive, manifest = load_archive(stage_dir)
    h = build_histogram(archive, int(manifest["feature_count"]))
    if not 1 <= nff <= h.feature_count:
        raise ConfigError(f"nff must be in [1, {h.feature_count}], got {nff}")
    top = top_features(h, nff)
    write_rows(
        ffh_path, FFH_FIELDS,
        ({"feature_index": i, "score": s} for i, s in histogram_rows(h)),
    )
    write_rows(
        top_path, FFH_TOP_FIELDS,
        (
            {"rank": rank, "feature_index": f, "score": float(h.scores[f])}
            for rank, f in enumerate(top, start=1)
        ),
    )
    logger.info(
        "FFH over %d runs: %d of %d features scored; top %d written to %s",
        archive.runs, h.nonzero_count, h.feature_count, nff, top_path,
    )
    return h


def read_histogram(path: Path) -> FreqHistogram:
    """Load an FFH CSV written by :func:`ffh_stage`."""
    path = Path(path)
    if not path.exists():
        raise ArchiveError(f"histogram file not found: {path}")
    rows = read_rows(path)
    scores = []
    for position, row in enumerate(rows):
        try:
            index = int(row["feature_index"])
            scores.append(float(row["score"]))
        except (KeyError, TypeError, ValueError):
            raise ArchiveError(f"{path}: malformed row {position + 1}") from None
        if index != position:
            raise ArchiveError(f"{path}: expected feature_index {position}, got {index}")
    return histogram_from_scores(scores)


def fine_stage(
    cfg: PipelineConfig,
    ds: Optional[FeatureDataset] = None,
    ffh_path: Optional[Path] = None,
) -> list[ParetoFront]:
    """Re-optimize, without the CF cap, over the top-NFF features of the histogram."""
    cfg.validate()
    ds = ds if ds is not None else load_dataset(cfg)
    h = read_histogram(ffh_path if ffh_path is not None else cfg.ffh_file)
    if h.feature_count != ds.feature_count:
        raise ArchiveError(
            f"histogram covers {h.feature_count} features but the dataset has {ds.feature_count}"
        )
    if cfg.nff > h.feature_count:
        raise ConfigError(f"nff must be in [1, {h.feature_count}], got {cfg.nff}")
    top = sorted(top_features(h, cfg.nff))
    engine_cfg = cfg.fine_config(len(top))
    logger.info(
        "Fine stage: R=%d, NFF=%d, NP=%d, generations=%d",
        cfg.runs, len(top), engine_cfg.population_size, engine_cfg.max_generations,
    )
    fronts = fine_search(ds, top, engine_cfg, cfg.runs, base_seed=cfg.seed, workers=cfg.workers)
    FrontStore(cfg.fine_dir).save_stage(
        fronts,
        stage="fine",
        feature_count=ds.feature_count,
        dataset_fingerprint=ds.fingerprint(),
        config=cfg.to_dict(),
        config_fingerprint=config_fingerprint(cfg.to_dict()),
        feature_subspace=top,
    )
    logger.info("Fine fronts written to %s", cfg.fine_dir)
    return fronts


# ----------------------------------------------------------------------
# Report
# ----------------------------------------------------------------------


def _class_columns(ds: FeatureDataset) -> list[str]:
    return [f"f1_{cls}" for cls in ds.class_ids]


def _safe_name(text: str) -> str:
    return _UNSAFE_NAME.sub("_", text)


def _stage_best(
    archive: RunArchive, ds: FeatureDataset, split: str, k: int
) -> list[tuple[ParetoFront, Individual, object]]:
    """``(front, best member, re-scored objectives on split)`` per non-empty run."""
    out = []
    for front in sorted(archive.fronts, key=lambda f: f.run_id):
        if not len(front):
            logger.warning("%s run %d has an empty front; skipped", front.stage, front.run_id)
            continue
        ind = best_subset(front)
        out.append((front, ind, evaluate_mask(ds, ind.mask, k=k, query_split=split)))
    return out


def _result_row(
    comparison: str, cls: str, pairs: int, alternative: str, result: Optional[SignedRankResult]
) -> dict:
    row = {"comparison": comparison, "class": cls, "pairs": pairs, "alternative": alternative}
    if result is None:
        row["method"] = "undefined"
        return row
    row.update(statistic=result.statistic, p_value=result.p_value, n=result.n, method=result.method)
    return row


def _paired_tests(
    comparison: str,
    a: Sequence[tuple[float, dict]],
    b: Sequence[tuple[float, dict]],
    class_ids: Sequence[str],
    alternative: str,
) -> list[dict]:
    """Macro-F1 test plus one test per class for paired ``(macro_f1, per_class_f1)`` lists."""
    try:
        macro: Optional[SignedRankResult] = signed_rank_test(
            [x[0] for x in a], [y[0] for y in b], alternative
        )
    except UndefinedInputError as exc:
        logger.warning("%s (macro): %s", comparison, exc)
        macro = None
    rows = [_result_row(comparison, "macro", len(a), alternative, macro)]
    per_class = per_class_wilcoxon(
        [x[1] for x in a], [y[1] for y in b], alternative, class_ids=class_ids
    )
    rows.extend(
        _result_row(comparison, cls, len(a), alternative, result)
        for cls, result in per_class.items()
    )
    return rows


def _very_coarse_summary(cfg: PipelineConfig, ds: FeatureDataset) -> Optional[dict]:
    if not (cfg.very_coarse_dir / "manifest.json").exists():
        return None
    archive, _ = load_archive(cfg.very_coarse_dir)
    archive.check_dataset(ds)
    front = archive.fronts[0]
    return {
        "evaluations": front.evaluations,
        "front_size": len(front),
        "suggested_cf": suggest_cf(front) if len(front) else None,
    }


def _present_stages(cfg: PipelineConfig) -> dict[str, RunArchive]:
    archives = {}
    for stage in STAGES:
        if (cfg.stage_dir(stage) / "manifest.json").exists():
            archives[stage], _ = load_archive(cfg.stage_dir(stage))
    if not archives:
        raise ArchiveError(f"no coarse or fine archive under {cfg.output}")
    return archives


def report(
    cfg: PipelineConfig,
    ds: Optional[FeatureDataset] = None,
    split: str = "test",
    alternative: str = "two-sided",
) -> dict:
    """Write the evaluation bundle for whichever stages exist; returns the summary.

    Files (under ``cfg.report_dir``): best_subsets.csv, stability.csv,
    stability_{stage}.csv, decision_space/{stage}_{class}.csv,
    ordered_selection.csv, wilcoxon.csv, single_feature_rank.csv,
    fronts_{stage}.csv and summary.json. The directory is emptied first.
    When a very-coarse run is stored, the summary carries its suggested CF.

    Raises
    ------
    FingerprintMismatchError
        An archive was produced from a different dataset.
    """
    ds = ds if ds is not None else load_dataset(cfg)
    ds.require_split(split)
    archives = _present_stages(cfg)
    for archive in archives.values():
        archive.check_dataset(ds)
    very_coarse = _very_coarse_summary(cfg, ds)
    out = cfg.report_dir
    if out.exists():
        # Files of stages missing from this report must not survive from an earlier one.
        shutil.rmtree(out)
    k = cfg.k
    class_cols = _class_columns(ds)

    baseline = all_features_baseline(ds, k=k, query_split=split)
    histogram = (
        build_histogram(archives["coarse"], ds.feature_count) if "coarse" in archives else None
    )

    best_rows, stability_rows, ordered_rows, front_rows = [], [], [], {}
    wilcoxon_rows: list[dict] = []
    scored: dict[str, dict[int, tuple[float, dict]]] = {}
    summary_stages: dict[str, dict] = {}

    for stage, archive in archives.items():
        best = _stage_best(archive, ds, split, k)
        scored[stage] = {
            front.run_id: (obj.macro_f1, dict(obj.per_class_f1)) for front, _, obj in best
        }

        for front, ind, obj in best:
            row = {
                "stage": stage,
                "run_id": front.run_id,
                "seed": front.seed,
                "size": ind.popcount,
                "search_error": ind.objectives.retrieval_error,
                "macro_f1": obj.macro_f1,
                "features": ind.selected_features(),
            }
            row.update({f"f1_{cls}": obj.per_class_f1[cls] for cls in ds.class_ids})
            best_rows.append(row)

        stage_summary: dict = {
            "runs": archive.runs,
            "evaluations": sum(f.evaluations for f in archive.fronts),
        }
        if best:
            sizes = [ind.popcount for _, ind, _ in best]
            stage_summary["mean_best_size"] = float(np.mean(sizes))
            stage_summary["mean_macro_f1"] = float(np.mean([obj.macro_f1 for *_, obj in best]))
            stage_summary["compression_ratio"] = ds.feature_count / float(np.mean(sizes))

        subsets = [ind.selected_features() for _, ind, _ in best]
        try:
            rep = stability_report(stage, subsets)
        except UndefinedInputError as exc:
            logger.warning("stability of %s stage undefined: %s", stage, exc)
            stage_summary["stability"] = None
        else:
            stage_summary["stability"] = rep.s_index
            stability_rows.append({"stage": stage, "subsets": len(subsets), "s_index": rep.s_index})
            run_ids = [front.run_id for front, _, _ in best]
            write_rows(
                out / f"stability_{stage}.csv", ("run_a", "run_b", "jaccard"),
                (
                    {
                        "run_a": run_ids[i],
                        "run_b": run_ids[j],
                        "jaccard": float(rep.pairwise_jaccard[i, j]),
                    }
                    for i in range(len(run_ids)) for j in range(i + 1, len(run_ids))
                ),
            )

        pooled = pooled_front(archive.fronts, stage)
        if len(pooled):
            space = decision_space(pooled, ds, split=split, k=k)
            for cls, points in space.fronts.items():
                write_rows(
                    out / "decision_space" / f"{stage}_{_safe_name(cls)}.csv",
                    ("raw_feature_count", "class_error", "features"),
                    (
                        {"raw_feature_count": p.raw_feature_count, "class_error": p.class_error,
                         "features": list(p.features)}
                        for p in points
                    ),
                )

        front_rows[stage] = [
            {
                "run_id": front.run_id,
                "raw_feature_count": ind.objectives.raw_feature_count,
                "feature_fraction": ind.objectives.feature_fraction,
                "retrieval_error": ind.objectives.retrieval_error,
                "features": ind.selected_features(),
            }
            for front in sorted(archive.fronts, key=lambda f: f.run_id)
            for ind in front
        ]

        if histogram is not None and best:
            evolved, ordered = [], []
            for front, ind, obj in best:
                base = evaluate_mask(
                    ds, ordered_selection(histogram, ind.popcount), k=k, query_split=split
                )
                ordered_rows.append({
                    "stage": stage,
                    "run_id": front.run_id,
                    "size": ind.popcount,
                    "evolved_macro_f1": obj.macro_f1,
                    "ordered_macro_f1": base.macro_f1,
                })
                evolved.append((obj.macro_f1, dict(obj.per_class_f1)))
                ordered.append((base.macro_f1, dict(base.per_class_f1)))
            wilcoxon_rows.extend(
                _paired_tests(f"{stage}_vs_ordered", evolved, ordered, ds.class_ids, alternative)
            )
        summary_stages[stage] = stage_summary

    if "coarse" in scored and "fine" in scored:
        common = sorted(set(scored["fine"]) & set(scored["coarse"]))
        wilcoxon_rows[:0] = _paired_tests(
            "fine_vs_coarse",
            [scored["fine"][r] for r in common],
            [scored["coarse"][r] for r in common],
            ds.class_ids,
            alternative,
        )

    if histogram is not None:
        reference = archives.get("fine", archives["coarse"])
        pooled = pooled_front(reference.fronts, "fine" if "fine" in archives else "coarse")
        if len(pooled):
            ranking = single_feature_rank(
                histogram, pooled, ds, top_n=min(cfg.nff, ds.feature_count), k=k, split=split
            )
            write_rows(
                out / "single_feature_rank.csv",
                ("feature", "score", "f1", "rank_fraction", "f1_difference"),
                (
                    {"feature": r.feature, "score": r.score, "f1": r.f1,
                     "rank_fraction": r.rank_fraction, "f1_difference": r.f1_difference}
                    for r in ranking.ranks
                ),
            )

    write_rows(
        out / "best_subsets.csv",
        ["stage", "run_id", "seed", "size", "search_error", "macro_f1", *class_cols, "features"],
        best_rows,
    )
    write_rows(out / "stability.csv", ("stage", "subsets", "s_index"), stability_rows)
    write_rows(
        out / "ordered_selection.csv",
        ("stage", "run_id", "size", "evolved_macro_f1", "ordered_macro_f1"),
        ordered_rows,
    )
    write_rows(
        out / "wilcoxon.csv",
        ("comparison", "class", "pairs", "n", "statistic", "p_value", "method", "alternative"),
        wilcoxon_rows,
    )
    for stage, rows in front_rows.items():
        write_rows(
            out / f"fronts_{stage}.csv",
            ("run_id", "raw_feature_count", "feature_fraction", "retrieval_error", "features"),
            rows,
        )

    summary = {
        "split": split,
        "k": k,
        "feature_count": ds.feature_count,
        "class_ids": list(ds.class_ids),
        "dataset_fingerprint": ds.fingerprint(),
        "all_features": {
            "macro_f1": baseline.macro_f1,
            "per_class_f1": {cls: baseline.per_class_f1[cls] for cls in ds.class_ids},
        },
        "stages": summary_stages,
    }
    if very_coarse is not None:
        summary["very_coarse"] = very_coarse
    atomic_write_json(out / "summary.json", summary)
    logger.info("Report written to %s", out)
    return summary


# ----------------------------------------------------------------------
# Export and full pipeline
# ----------------------------------------------------------------------


def export(
    ds: FeatureDataset,
    stage_dir: Path,
    run_id: int,
    output_path: Path,
    split: Optional[str] = None,
) -> list[int]:
    """Write the best subset of one run as per-sample masked features.

    Columns are ``f{index}`` for each selected feature followed by label and
    split (and group when present). *split* restricts the rows; ``None`` keeps all.
    """
    front, manifest = FrontStore(stage_dir).load_run(run_id)
    archive = RunArchive(fronts=[front], dataset_fingerprint=manifest.get("dataset_fingerprint"))
    archive.check_dataset(ds)
    features = best_subset(front).selected_features()
    rows = np.arange(ds.sample_count) if split is None else ds.require_split(split)
    columns = [f"f{i}" for i in features]
    extra = ["label", "split"] + (["group"] if ds.groups is not None else [])

    def records():
        for r in rows:
            rec = {c: float(ds.values[r, i]) for c, i in zip(columns, features)}
            rec["label"] = str(ds.labels[r])
            rec["split"] = str(ds.splits[r])
            if ds.groups is not None:
                rec["group"] = str(ds.groups[r])
            yield rec

    write_rows(output_path, columns + extra, records())
    logger.info("Exported %d rows × %d features to %s", len(rows), len(features), output_path)
    return features


def run_all(cfg: PipelineConfig, split: str = "test", alternative: str = "two-sided") -> dict:
    """Coarse ×R → FFH → fine ×R → report, sharing one loaded dataset."""
    cfg.validate()
    ds = load_dataset(cfg)
    coarse_stage(cfg, ds)
    ffh_stage(cfg.coarse_dir, cfg.nff, cfg.ffh_file, cfg.ffh_top_file)
    fine_stage(cfg, ds)
    return report(cfg, ds, split=split, alternative=alternative)
