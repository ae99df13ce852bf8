"""Frequent Features Histogram (FFH) and the two-stage search built on it.

A feature's frequency score over an archive of R coarse fronts is

    FreqScore(f) = Σ_r δ_r(f) · (1 + Fr(r, f) / R)

where Fr(r, f) counts the distinct subsets on run r's front that contain f
and δ_r(f) is 1 when Fr(r, f) > 0. Appearing in a run earns one point;
each subset of that run containing f earns a further 1/R. The sum is
evaluated as ``runs_with_f + (Σ_r Fr(r, f)) / R`` so it does not depend on
run order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from aind_embedding_selector.config import EngineConfig
from aind_embedding_selector.engine.runner import run_engine
from aind_embedding_selector.errors import (
    ArchiveError,
    EmbeddingSelectorError,
    FingerprintMismatchError,
    RunError,
)
from aind_embedding_selector.models.dataset import FeatureDataset
from aind_embedding_selector.models.front import ParetoFront

logger = logging.getLogger(__name__)


@dataclass
class RunArchive:
    """Fronts of R independent coarse runs over the same dataset."""

    fronts: list = field(default_factory=list)
    dataset_fingerprint: Optional[str] = None
    config_fingerprint: Optional[str] = None

    def __post_init__(self) -> None:
        ids = [f.run_id for f in self.fronts]
        if len(set(ids)) != len(ids):
            raise ArchiveError(f"duplicate run IDs in archive: {sorted(ids)}")
        dims = {f.feature_count for f in self.fronts if len(f)}
        if len(dims) > 1:
            raise ArchiveError(f"fronts disagree on feature count: {sorted(dims)}")

    @property
    def runs(self) -> int:
        return len(self.fronts)

    @property
    def feature_count(self) -> int:
        for front in self.fronts:
            if len(front):
                return front.feature_count
        return 0

    def check_dataset(self, ds: FeatureDataset) -> None:
        """Raise :class:`FingerprintMismatchError` if the archive came from another dataset."""
        if self.dataset_fingerprint is not None and self.dataset_fingerprint != ds.fingerprint():
            raise FingerprintMismatchError(
                "archive was produced from a different dataset "
                f"(archive {self.dataset_fingerprint[:12]}…, dataset {ds.fingerprint()[:12]}…)"
            )


@dataclass(frozen=True)
class FreqHistogram:
    """Per-feature frequency scores and the features ranked by score."""

    scores: np.ndarray
    runs: int
    top_order: tuple

    @property
    def feature_count(self) -> int:
        return int(self.scores.size)

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.scores))


def _membership_counts(front: ParetoFront, feature_count: int) -> np.ndarray:
    counts = np.zeros(feature_count, dtype=np.int64)
    for subset in front.subsets():
        counts[list(subset)] += 1
    return counts


def freq_score(archive: RunArchive, feature: int) -> float:
    """Frequency score of one feature over *archive*."""
    if not 0 <= feature < archive.feature_count:
        raise ValueError(f"feature index {feature} out of range")
    present = 0
    total = 0
    for front in archive.fronts:
        fr = sum(1 for subset in front.subsets() if feature in subset)
        if fr > 0:
            present += 1
            total += fr
    return present + total / archive.runs


def build_histogram(archive: RunArchive, feature_count: Optional[int] = None) -> FreqHistogram:
    """Score every feature; ties in ``top_order`` go to the lower index.

    *feature_count* is only needed when no front in the archive has a member.
    """
    if archive.runs == 0:
        raise ArchiveError("cannot build a histogram from an empty archive")
    d = feature_count if feature_count is not None else archive.feature_count
    if d < 1:
        raise ArchiveError("archive has no members; pass feature_count explicitly")

    present = np.zeros(d, dtype=np.int64)
    total = np.zeros(d, dtype=np.int64)
    for front in archive.fronts:
        counts = _membership_counts(front, d)
        present += counts > 0
        total += counts
    return histogram_from_scores(present + total / archive.runs, runs=archive.runs)


def histogram_from_scores(scores, runs: int = 0) -> FreqHistogram:
    """Rebuild a histogram from persisted per-feature scores (e.g. an FFH CSV)."""
    values = np.array(scores, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ArchiveError("scores must be a non-empty 1-D sequence")
    values.setflags(write=False)
    order = np.lexsort((np.arange(values.size), -values))
    return FreqHistogram(scores=values, runs=runs, top_order=tuple(int(i) for i in order))


def histogram_rows(h: FreqHistogram) -> list[tuple[int, float]]:
    """``(feature_index, score)`` for every feature, by ascending index."""
    return [(i, float(s)) for i, s in enumerate(h.scores)]


def top_features(h: FreqHistogram, nff: int) -> list[int]:
    """The *nff* highest-scoring features, in score order.

    Asking for more features than have a non-zero score is allowed: a warning
    is logged and zero-score features are admitted by ascending index.
    """
    if not 1 <= nff <= h.feature_count:
        raise ValueError(f"nff must be in [1, {h.feature_count}], got {nff}")
    if nff > h.nonzero_count:
        logger.warning(
            "nff=%d exceeds the %d features with a non-zero frequency score; "
            "zero-score features are admitted by index order", nff, h.nonzero_count,
        )
    return list(h.top_order[:nff])


def ordered_selection(h: FreqHistogram, size: int) -> np.ndarray:
    """Baseline mask selecting the *size* top-ranked features without any search."""
    if size < 1:
        raise ValueError("size must be >= 1")
    mask = np.zeros(h.feature_count, dtype=bool)
    mask[top_features(h, size)] = True
    return mask


# ----------------------------------------------------------------------
# Stage orchestration
# ----------------------------------------------------------------------


def _run_with_context(ds, cfg, subspace, run_id, stage) -> ParetoFront:
    try:
        return run_engine(ds, cfg, feature_subspace=subspace, run_id=run_id, stage=stage)
    except EmbeddingSelectorError as exc:
        raise RunError(run_id, stage, exc) from exc


def _run_many(ds, cfg, subspace, runs, base_seed, stage, workers) -> list[ParetoFront]:
    jobs = (
        delayed(_run_with_context)(ds, cfg.with_overrides(seed=base_seed + i), subspace, i, stage)
        for i in range(runs)
    )
    if workers > 1:
        return list(Parallel(n_jobs=workers)(jobs))
    return [fn(*args, **kwargs) for fn, args, kwargs in jobs]


def run_coarse_stage(
    ds: FeatureDataset,
    cfg: EngineConfig,
    runs: int,
    base_seed: Optional[int] = None,
    workers: int = 1,
) -> RunArchive:
    """Run *runs* independent coarse searches with seeds ``base_seed + run_id``."""
    base = cfg.seed if base_seed is None else base_seed
    fronts = _run_many(ds, cfg, None, runs, base, "coarse", workers)
    return RunArchive(fronts=fronts, dataset_fingerprint=ds.fingerprint())


def run_fine_stage(
    ds: FeatureDataset,
    archive: RunArchive,
    nff: int,
    cfg: EngineConfig,
    run_id: int = 0,
) -> ParetoFront:
    """Search the *nff* most frequent features without the CF cap.

    The engine runs on the projection to :func:`top_features`, taken in
    ascending index order, with ``cf = stage_dim = nff``; returned masks use
    original feature indices.
    """
    archive.check_dataset(ds)
    top = sorted(top_features(build_histogram(archive, ds.feature_count), nff))
    fine_cfg = cfg.with_overrides(stage_dim=len(top), cf=len(top))
    return _run_with_context(ds, fine_cfg, top, run_id, "fine")


def run_fine_stages(
    ds: FeatureDataset,
    archive: RunArchive,
    nff: int,
    cfg: EngineConfig,
    runs: int,
    base_seed: Optional[int] = None,
    workers: int = 1,
) -> list[ParetoFront]:
    """Repeat :func:`run_fine_stage` *runs* times with seeds ``base_seed + run_id``."""
    archive.check_dataset(ds)
    top = sorted(top_features(build_histogram(archive, ds.feature_count), nff))
    return fine_search(ds, top, cfg, runs, base_seed, workers)


def fine_search(
    ds: FeatureDataset,
    subspace: Sequence[int],
    cfg: EngineConfig,
    runs: int,
    base_seed: Optional[int] = None,
    workers: int = 1,
) -> list[ParetoFront]:
    """Run *runs* unconstrained searches restricted to the original indices *subspace*.

    The subspace is searched in ascending index order whatever order it is
    given in, so a score-ordered top list and its sorted copy give the same fronts.
    """
    subspace = sorted(int(i) for i in subspace)
    fine_cfg = cfg.with_overrides(stage_dim=len(subspace), cf=len(subspace))
    base = cfg.seed if base_seed is None else base_seed
    return _run_many(ds, fine_cfg, subspace, runs, base, "fine", workers)
