"""Single-feature retrieval quality of frequent features versus front features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aind_embedding_selector.engine.innovization import FreqHistogram, top_features
from aind_embedding_selector.engine.retrieval import DEFAULT_K, evaluate_mask
from aind_embedding_selector.models.dataset import FeatureDataset
from aind_embedding_selector.models.front import ParetoFront


@dataclass(frozen=True)
class FeatureRank:
    """How one frequent feature, used alone, compares to the front's features used alone.

    ``rank_fraction`` is the share of front features whose singleton macro-F1
    is strictly lower; ``f1_difference`` is this feature's singleton F1 minus
    the mean singleton F1 over the front features.
    """

    feature: int
    score: float
    f1: float
    rank_fraction: float
    f1_difference: float


@dataclass(frozen=True)
class SingleFeatureRanking:
    front_features: tuple
    front_mean_f1: float
    ranks: tuple


def single_feature_rank(
    h: FreqHistogram,
    front: ParetoFront,
    ds: FeatureDataset,
    top_n: int,
    k: int = DEFAULT_K,
    split: str = "validation",
) -> SingleFeatureRanking:
    """Rank the *top_n* most frequent features against every feature on *front*."""
    if not len(front):
        raise ValueError("front is empty")
    front_features = sorted({f for subset in front.subsets() for f in subset})
    frequent = top_features(h, top_n)

    cache: dict[int, float] = {}

    def singleton_f1(f: int) -> float:
        if f not in cache:
            mask = np.zeros(ds.feature_count, dtype=bool)
            mask[f] = True
            cache[f] = evaluate_mask(ds, mask, k=k, query_split=split).macro_f1
        return cache[f]

    front_f1 = np.array([singleton_f1(f) for f in front_features])
    mean_f1 = float(front_f1.mean())
    ranks = []
    for f in frequent:
        value = singleton_f1(f)
        ranks.append(FeatureRank(
            feature=f,
            score=float(h.scores[f]),
            f1=value,
            rank_fraction=float(np.count_nonzero(front_f1 < value)) / front_f1.size,
            f1_difference=value - mean_f1,
        ))
    return SingleFeatureRanking(
        front_features=tuple(front_features), front_mean_f1=mean_f1, ranks=tuple(ranks)
    )
