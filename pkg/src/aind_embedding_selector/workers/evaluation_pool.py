"""Concurrent fitness evaluation of a batch of individuals.

Evaluation is a pure function of the mask and the shared read-only dataset,
so a generation's children can be scored on a thread pool (numpy releases
the GIL inside the distance kernels). Results are written back in input
order; nothing here touches the run's random generator.
"""

from __future__ import annotations

import concurrent.futures
from typing import Callable, Optional, Sequence

from aind_embedding_selector.engine.retrieval import ObjectiveVector
from aind_embedding_selector.models.front import Individual

EvaluateFn = Callable[[Individual], ObjectiveVector]


def evaluate_individuals(
    individuals: Sequence[Individual],
    evaluate: EvaluateFn,
    workers: int = 1,
    observer: Optional[Callable[[Individual], None]] = None,
) -> int:
    """Fill ``objectives`` of every individual; returns the number of evaluations.

    Parameters
    ----------
    individuals:
        Individuals to score, evaluated or not (every one is re-scored).
    evaluate:
        Maps an individual to its :class:`ObjectiveVector`.
    workers:
        Thread count; 1 evaluates sequentially in the calling thread.
    observer:
        Called once per individual, in input order, after scoring.
    """
    if workers > 1 and len(individuals) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(evaluate, individuals))
    else:
        results = [evaluate(ind) for ind in individuals]

    for ind, objectives in zip(individuals, results):
        ind.objectives = objectives
        if observer is not None:
            observer(ind)
    return len(results)
