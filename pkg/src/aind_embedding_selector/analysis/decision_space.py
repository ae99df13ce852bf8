"""Per-class decomposition of a front into class-level Pareto fronts.

Macro-F1 hides how a subset performs on each class. Re-scoring every front
member per class and keeping, for each class, the members nondominated in
(feature count, 1 − class F1) exposes those embedded sub-objectives to
whoever has to pick one subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from aind_embedding_selector.engine.retrieval import DEFAULT_K, evaluate_mask
from aind_embedding_selector.engine.selection import nondominated_indices
from aind_embedding_selector.models.dataset import FeatureDataset
from aind_embedding_selector.models.front import ParetoFront


@dataclass(frozen=True)
class ClassPoint:
    raw_feature_count: int
    class_error: float
    features: tuple


@dataclass
class DecisionSpace:
    """class ID → nondominated ``ClassPoint`` list, sorted by feature count then error."""

    fronts: dict = field(default_factory=dict)


def decision_space(
    front: ParetoFront, ds: FeatureDataset, split: str = "test", k: int = DEFAULT_K
) -> DecisionSpace:
    """Per-class Pareto fronts of *front*'s members retrieved on *split*."""
    scored = [
        (ind, evaluate_mask(ds, ind.mask, k=k, query_split=split)) for ind in front.solutions
    ]
    space = DecisionSpace()
    for cls in ds.class_ids:
        points = [
            ClassPoint(
                raw_feature_count=obj.raw_feature_count,
                class_error=1.0 - obj.per_class_f1[cls],
                features=tuple(ind.selected_features()),
            )
            for ind, obj in scored
        ]
        keep = nondominated_indices([(p.raw_feature_count, p.class_error) for p in points])
        space.fronts[cls] = sorted(
            (points[i] for i in keep),
            key=lambda p: (p.raw_feature_count, p.class_error, p.features),
        )
    return space
