"""The generational loop: initialise, evaluate, vary, select, repeat.

One run consumes a single ``numpy.random.default_rng(cfg.seed)`` in a fixed
order (initial population, then per generation the offspring draws of
:func:`make_offspring` followed by any niching tie draws), so identical
inputs give identical fronts regardless of how many evaluation threads are
used.
"""

from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from aind_embedding_selector.config import EngineConfig
from aind_embedding_selector.engine.operators import init_population, make_offspring
from aind_embedding_selector.engine.retrieval import evaluate_mask
from aind_embedding_selector.engine.selection import nondominated_indices, nsga3_select
from aind_embedding_selector.errors import ConfigError
from aind_embedding_selector.models.dataset import FeatureDataset
from aind_embedding_selector.models.front import Individual, ParetoFront
from aind_embedding_selector.workers.evaluation_pool import evaluate_individuals

logger = logging.getLogger(__name__)


def run_engine(
    ds: FeatureDataset,
    cfg: EngineConfig,
    feature_subspace: Optional[Sequence[int]] = None,
    run_id: int = 0,
    stage: str = "coarse",
    observer: Optional[Callable[[Individual], None]] = None,
) -> ParetoFront:
    """Run one constrained evolutionary search and return its final nondominated set.

    Parameters
    ----------
    ds:
        Dataset with non-empty ``train`` and ``cfg.query_split`` splits.
    cfg:
        Engine settings; ``cfg.stage_dim`` must equal the searched dimension.
    feature_subspace:
        Original feature indices to search over (fine stage). The returned
        masks are always re-expressed over all ``ds.feature_count`` features.
    run_id, stage:
        Recorded on the returned front.
    observer:
        Called with every individual right after it is evaluated (masks in
        the searched space).

    Returns
    -------
    ParetoFront
        Mutually nondominated, mask-deduplicated members of the final
        population, ordered by feature count, then error, then indices.
        ``evaluations`` holds the number of fitness calls made.
    """
    cfg.validate()
    if feature_subspace is not None:
        subspace = np.asarray(list(feature_subspace), dtype=np.int64)
        if subspace.size != cfg.stage_dim:
            raise ConfigError(
                f"feature_subspace has {subspace.size} features but stage_dim={cfg.stage_dim}"
            )
        work = ds.project(subspace)
    else:
        subspace = None
        if cfg.stage_dim != ds.feature_count:
            raise ConfigError(
                f"stage_dim={cfg.stage_dim} does not match dataset D={ds.feature_count}"
            )
        work = ds
    work.require_split("train")
    work.require_split(cfg.query_split)

    def evaluate(ind: Individual):
        return evaluate_mask(work, ind.mask, cfg.k, cfg.query_split, cfg.stage_dim)

    rng = np.random.default_rng(cfg.seed)
    population = init_population(cfg, rng)
    evaluations = evaluate_individuals(population, evaluate, cfg.eval_workers, observer)

    for generation in range(cfg.max_generations):
        if (cfg.max_evaluations is not None
                and evaluations + cfg.population_size > cfg.max_evaluations):
            logger.info("run %d (%s): evaluation cap %d reached at generation %d",
                        run_id, stage, cfg.max_evaluations, generation)
            break
        children = make_offspring(population, cfg, rng)
        evaluations += evaluate_individuals(children, evaluate, cfg.eval_workers, observer)
        population = nsga3_select(population + children, cfg.population_size, rng)
        if logger.isEnabledFor(logging.DEBUG):
            best = min(ind.objectives.retrieval_error for ind in population)
            logger.debug("run %d (%s) gen %d: best error %.4f",
                         run_id, stage, generation + 1, best)

    front = ParetoFront(
        solutions=_final_front(population, subspace, ds.feature_count),
        run_id=run_id,
        stage=stage,
        seed=cfg.seed,
        stage_dim=cfg.stage_dim,
        evaluations=evaluations,
    )
    logger.info("run %d (%s): %d evaluations, %d nondominated subsets",
                run_id, stage, evaluations, len(front))
    return front


def _final_front(
    population: list[Individual], subspace: Optional[np.ndarray], feature_count: int
) -> list[Individual]:
    seen: set = set()
    members = []
    for i in nondominated_indices(population):
        ind = population[i]
        key = ind.mask_key()
        if key in seen:
            continue
        seen.add(key)
        if subspace is None:
            mask = ind.mask.copy()
        else:
            mask = np.zeros(feature_count, dtype=bool)
            mask[subspace[ind.mask]] = True
        members.append(Individual(mask, ind.objectives))
    members.sort(key=lambda m: (m.objectives.raw_feature_count,
                                m.objectives.retrieval_error,
                                m.selected_features()))
    return members
