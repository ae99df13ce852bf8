"""Pareto dominance, nondominated sorting and reference-line niching (2 objectives).

Both objectives are minimised. Survivor selection admits whole fronts while
they fit and fills the remaining slots from the splitting front by niching
around uniformly spread reference lines, as NSGA-III does.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from aind_embedding_selector.engine.retrieval import ObjectiveVector
from aind_embedding_selector.models.front import Individual

logger = logging.getLogger(__name__)


def _point(p) -> tuple[float, float]:
    if isinstance(p, ObjectiveVector):
        return p.values
    if isinstance(p, Individual):
        return p.objectives.values
    a, b = p
    return float(a), float(b)


def _matrix(points: Sequence) -> np.ndarray:
    return np.array([_point(p) for p in points], dtype=np.float64).reshape(-1, 2)


def dominates(a, b) -> bool:
    """True iff *a* is no worse than *b* in both objectives and better in at least one."""
    pa, pb = _point(a), _point(b)
    return pa[0] <= pb[0] and pa[1] <= pb[1] and (pa[0] < pb[0] or pa[1] < pb[1])


def nondominated_sort(points: Sequence) -> list[list[int]]:
    """Partition *points* into fronts of indices (front 0 = nondominated set).

    Every index appears exactly once; indices within a front are ascending.
    """
    f = _matrix(points)
    n = f.shape[0]
    if n == 0:
        return []
    le = (f[:, None, :] <= f[None, :, :]).all(axis=2)
    lt = (f[:, None, :] < f[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    remaining = dom.sum(axis=0)

    fronts: list[list[int]] = []
    current = np.flatnonzero(remaining == 0)
    assigned = np.zeros(n, dtype=bool)
    while current.size:
        fronts.append([int(i) for i in current])
        assigned[current] = True
        remaining = remaining - dom[current].sum(axis=0)
        current = np.flatnonzero((remaining == 0) & ~assigned)
    return fronts


def nondominated_indices(points: Sequence) -> list[int]:
    """Indices of the nondominated members of *points*, ascending."""
    fronts = nondominated_sort(points)
    return fronts[0] if fronts else []


def reference_points(np_target: int) -> np.ndarray:
    """Das–Dennis points on the 2-D unit simplex with ``np_target − 1`` divisions.

    Row i is ``(i / (n − 1), 1 − i / (n − 1))``.
    """
    if np_target < 2:
        raise ValueError("np_target must be >= 2")
    first = np.arange(np_target, dtype=np.float64) / (np_target - 1)
    return np.column_stack([first, 1.0 - first])


def _associate(
    normalized: np.ndarray, refs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest reference line (by perpendicular distance) of every normalised point."""
    unit = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    proj = normalized @ unit.T  # (n, lines) scalar projections
    # |p|^2 - (p·u)^2 = squared perpendicular distance
    sq = (normalized * normalized).sum(axis=1)[:, None] - proj * proj
    dist = np.sqrt(np.clip(sq, 0.0, None))
    line = np.argmin(dist, axis=1)
    return line, dist[np.arange(normalized.shape[0]), line]


def nsga3_select(
    merged: Sequence[Individual], population_size: int, rng: np.random.Generator
) -> list[Individual]:
    """Choose *population_size* survivors from the evaluated *merged* population.

    Members whose mask repeats an earlier member's mask are only used when
    the distinct members cannot fill the population. Reference lines come
    from :func:`reference_points` (*population_size* lines). Objectives are
    normalised by the ideal point (componentwise minimum of the candidates)
    and the extent up to the first front's componentwise maximum; a
    zero-extent axis is divided by 1.

    The generator is consumed only when several reference lines tie for the
    smallest niche count.
    """
    seen: set = set()
    unique, duplicates = [], []
    for i, ind in enumerate(merged):
        key = ind.mask_key()
        (duplicates if key in seen else unique).append(i)
        seen.add(key)

    if len(unique) <= population_size:
        chosen = unique + duplicates[: population_size - len(unique)]
        return [merged[i] for i in chosen]

    pool = [merged[i] for i in unique]
    f = _matrix(pool)
    fronts = nondominated_sort(pool)

    selected: list[int] = []
    split_front: list[int] = []
    for front in fronts:
        if len(selected) + len(front) <= population_size:
            selected.extend(front)
            if len(selected) == population_size:
                break
        else:
            split_front = front
            break

    if split_front:
        selected.extend(_niche_fill(f, fronts[0], selected, split_front,
                                    population_size - len(selected), rng))
    return [pool[i] for i in selected]


def _niche_fill(
    f: np.ndarray,
    first_front: list[int],
    selected: list[int],
    split_front: list[int],
    slots: int,
    rng: np.random.Generator,
) -> list[int]:
    population_size = len(selected) + slots
    ideal = f.min(axis=0)
    extent = f[first_front].max(axis=0) - ideal
    extent[extent <= 0] = 1.0
    normalized = (f - ideal) / extent

    refs = reference_points(population_size)
    line, dist = _associate(normalized, refs)

    niche = np.zeros(refs.shape[0], dtype=np.int64)
    for i in selected:
        niche[line[i]] += 1

    candidates = {int(i) for i in split_front}
    picked: list[int] = []
    while len(picked) < slots:
        active = sorted({int(line[i]) for i in candidates})
        counts = niche[active]
        tied = [j for j, c in zip(active, counts) if c == counts.min()]
        j = tied[0] if len(tied) == 1 else tied[int(rng.integers(len(tied)))]
        on_line = [i for i in candidates if line[i] == j]
        best = min(on_line, key=lambda i: (dist[i], i))
        picked.append(best)
        candidates.remove(best)
        niche[j] += 1
    return picked
