"""kNN-retrieval fitness: masked Euclidean search of query rows among training rows.

Each query sample retrieves its ``k`` nearest training samples under a
feature mask and is assigned their majority label (ties go to the nearest
tied neighbour; equal distances go to the lower training row index). The
predictions are scored by macro-averaged F1 over the dataset's classes,
with every 0/0 ratio defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from aind_embedding_selector.errors import InvalidMaskError
from aind_embedding_selector.models.dataset import FeatureDataset
from aind_embedding_selector.utils.voting import majority_vote

DEFAULT_K = 3

# Upper bound on floats materialised per distance chunk (query × train × feature).
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class true-positive / false-positive / false-negative counts."""

    class_ids: tuple
    true_positive: tuple
    false_positive: tuple
    false_negative: tuple

    def index(self, cls: Hashable) -> int:
        try:
            return self.class_ids.index(cls)
        except ValueError:
            raise KeyError(f"unknown class {cls!r}") from None

    @property
    def query_count(self) -> int:
        return int(sum(self.true_positive) + sum(self.false_negative))


@dataclass(frozen=True)
class ObjectiveVector:
    """The two minimised objectives of a mask plus the per-class F1 breakdown."""

    feature_fraction: float
    retrieval_error: float
    raw_feature_count: int
    per_class_f1: Mapping[str, float] = field(default_factory=dict)

    @property
    def values(self) -> tuple[float, float]:
        return (self.feature_fraction, self.retrieval_error)

    @property
    def macro_f1(self) -> float:
        return 1.0 - self.retrieval_error


# ----------------------------------------------------------------------
# Metrics
# ----------------------------------------------------------------------


def confusion_counts(
    true_labels: Sequence[Hashable],
    predicted_labels: Sequence[Hashable],
    class_ids: Sequence[Hashable],
) -> ConfusionCounts:
    """Tally TP/FP/FN per class for paired true and predicted labels."""
    if len(true_labels) != len(predicted_labels):
        raise ValueError("true and predicted labels must have equal length")
    tp = {c: 0 for c in class_ids}
    fp = {c: 0 for c in class_ids}
    fn = {c: 0 for c in class_ids}
    for t, p in zip(true_labels, predicted_labels):
        if t == p:
            tp[t] += 1
        else:
            fn[t] += 1
            if p in fp:
                fp[p] += 1
    ids = tuple(class_ids)
    return ConfusionCounts(
        class_ids=ids,
        true_positive=tuple(tp[c] for c in ids),
        false_positive=tuple(fp[c] for c in ids),
        false_negative=tuple(fn[c] for c in ids),
    )


def precision_recall(counts: ConfusionCounts, cls: Hashable) -> tuple[float, float]:
    """Return ``(TP/(TP+FP), TP/(TP+FN))`` for *cls*; a zero denominator gives 0."""
    i = counts.index(cls)
    tp = counts.true_positive[i]
    fp = counts.false_positive[i]
    fn = counts.false_negative[i]
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return float(precision), float(recall)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def macro_f1(counts: ConfusionCounts) -> tuple[float, dict]:
    """Return ``(unweighted mean F1 over classes, {class: F1})``."""
    per_class = {c: f1_score(*precision_recall(counts, c)) for c in counts.class_ids}
    if not per_class:
        return 0.0, per_class
    return sum(per_class.values()) / len(per_class), per_class


# ----------------------------------------------------------------------
# Nearest-neighbour retrieval
# ----------------------------------------------------------------------


def nearest_rows(train: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    """Return the ``(n_queries, k)`` training row positions nearest to each query.

    Distances are squared Euclidean; the stable sort sends equal distances to
    the lower training row position. ``k`` is clamped to the training size.
    """
    train = np.asarray(train, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if train.ndim != 2 or train.shape[1] == 0:
        raise InvalidMaskError("mask selects no feature")
    if train.shape[0] == 0:
        raise ValueError("training set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, train.shape[0])

    per_query = train.shape[0] * train.shape[1]
    chunk = max(1, _CHUNK_ELEMENTS // per_query)
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        diff = q[:, None, :] - train[None, :, :]
        dist = (diff * diff).sum(axis=2)
        out[start:start + chunk] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


def knn_predict(
    train: np.ndarray, train_labels: Sequence[Hashable], query: np.ndarray, k: int = DEFAULT_K
) -> Hashable:
    """Classify one (already masked) *query* row by majority vote of its k nearest rows."""
    nearest = nearest_rows(train, np.asarray(query, dtype=np.float64).reshape(1, -1), k)[0]
    return majority_vote([train_labels[i] for i in nearest])


def _as_mask(mask, feature_count: int) -> np.ndarray:
    m = np.asarray(mask)
    if m.shape != (feature_count,):
        raise InvalidMaskError(f"mask length {m.size} does not match D={feature_count}")
    m = m.astype(bool)
    if not m.any():
        raise InvalidMaskError("mask selects no feature")
    return m


def predict_split(
    ds: FeatureDataset, mask, k: int = DEFAULT_K, query_split: str = "validation"
) -> tuple[np.ndarray, np.ndarray]:
    """Predict every *query_split* row against the ``train`` split under *mask*.

    Returns ``(true_codes, predicted_codes)`` as indices into ``ds.class_ids``.
    """
    m = _as_mask(mask, ds.feature_count)
    train_idx = ds.require_split("train")
    query_idx = ds.require_split(query_split)
    train_x = ds.values[np.ix_(train_idx, m)]
    query_x = ds.values[np.ix_(query_idx, m)]
    train_codes = ds.label_codes[train_idx].tolist()

    nearest = nearest_rows(train_x, query_x, k)
    predicted = np.array(
        [majority_vote([train_codes[j] for j in row]) for row in nearest], dtype=np.int64
    )
    return ds.label_codes[query_idx], predicted


def evaluate_mask(
    ds: FeatureDataset,
    mask,
    k: int = DEFAULT_K,
    query_split: str = "validation",
    stage_dim: Optional[int] = None,
) -> ObjectiveVector:
    """Score *mask* as ``(popcount / stage_dim, 1 − macro-F1)``.

    *stage_dim* defaults to the mask length; it only rescales the feature
    fraction and never changes the retrieval error.
    """
    m = _as_mask(mask, ds.feature_count)
    true_codes, predicted = predict_split(ds, m, k, query_split)
    codes = tuple(range(len(ds.class_ids)))
    counts = confusion_counts(true_codes.tolist(), predicted.tolist(), codes)
    macro, per_code = macro_f1(counts)
    popcount = int(m.sum())
    dim = ds.feature_count if stage_dim is None else int(stage_dim)
    return ObjectiveVector(
        feature_fraction=popcount / dim,
        retrieval_error=1.0 - macro,
        raw_feature_count=popcount,
        per_class_f1={ds.class_ids[c]: f for c, f in per_code.items()},
    )


def all_features_baseline(
    ds: FeatureDataset, k: int = DEFAULT_K, query_split: str = "test"
) -> ObjectiveVector:
    """Retrieval quality of the full-length feature vector."""
    return evaluate_mask(ds, np.ones(ds.feature_count, dtype=bool), k, query_split)
