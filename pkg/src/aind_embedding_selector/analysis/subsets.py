"""Picking representative subsets out of fronts."""

from __future__ import annotations

from typing import Sequence

from aind_embedding_selector.models.front import Individual, ParetoFront


def best_subset(front: ParetoFront) -> Individual:
    """Member with the highest macro-F1 (lowest retrieval error).

    Ties go to fewer features, then to the lexicographically smallest mask
    (bit 0 first, unselected < selected).
    """
    if not len(front):
        raise ValueError("front is empty")
    return min(
        front.solutions,
        key=lambda ind: (
            ind.objectives.retrieval_error,
            ind.objectives.raw_feature_count,
            tuple(ind.mask.tolist()),
        ),
    )


def pooled_front(fronts: Sequence[ParetoFront], stage: str = "coarse") -> ParetoFront:
    """All members of *fronts* in run order, with repeated masks dropped.

    The result is a pool, not necessarily mutually nondominated; it stands in
    for "every subset found by this stage" in stage-level analyses.
    """
    seen: set = set()
    members = []
    for front in fronts:
        for ind in front.solutions:
            key = ind.mask_key()
            if key not in seen:
                seen.add(key)
                members.append(ind)
    stage_dims = {f.stage_dim for f in fronts}
    return ParetoFront(
        solutions=members,
        run_id=-1,
        stage=stage,
        stage_dim=stage_dims.pop() if len(stage_dims) == 1 else 0,
        evaluations=sum(f.evaluations for f in fronts),
    )


def suggest_cf(front: ParetoFront) -> int:
    """Largest subset size on an (unconstrained) front: a data-driven cap for the coarse search."""
    if not len(front):
        raise ValueError("front is empty")
    return max(ind.popcount for ind in front.solutions)
