"""Selection stability across independent runs (mean pairwise Jaccard index)."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from aind_embedding_selector.errors import UndefinedInputError


@dataclass(frozen=True)
class StabilityReport:
    """Pairwise Jaccard matrix and its off-diagonal mean S for one method."""

    method: str
    subsets: tuple
    pairwise_jaccard: np.ndarray
    s_index: float


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    """``|a ∩ b| / |a ∪ b|``; undefined when both sets are empty."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise UndefinedInputError("Jaccard index of two empty sets is undefined")
    return len(a & b) / len(union)


def stability(subsets: Sequence[Iterable[int]]) -> float:
    """Mean Jaccard index over all L(L−1)/2 pairs of *subsets* (L >= 2)."""
    sets = [set(s) for s in subsets]
    if len(sets) < 2:
        raise UndefinedInputError("stability needs at least two subsets")
    values = [jaccard(a, b) for a, b in combinations(sets, 2)]
    return sum(values) / len(values)


def stability_report(method: str, subsets: Sequence[Iterable[int]]) -> StabilityReport:
    """Build the full pairwise matrix (diagonal 1) and S for *method*."""
    sets = tuple(frozenset(s) for s in subsets)
    n = len(sets)
    matrix = np.eye(n)
    for i, j in combinations(range(n), 2):
        matrix[i, j] = matrix[j, i] = jaccard(sets[i], sets[j])
    matrix.setflags(write=False)
    return StabilityReport(method=method, subsets=sets, pairwise_jaccard=matrix,
                           s_index=stability(sets))
