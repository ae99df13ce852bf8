"""Constraint-aware generative operators over binary feature masks.

Every operator that can change a mask's popcount finishes with
:func:`repair_mask` when a cap ``cf`` is given, so offspring always select
between 1 and ``cf`` features.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from aind_embedding_selector.config import EngineConfig
from aind_embedding_selector.models.front import Individual


def init_population(cfg: EngineConfig, rng: np.random.Generator) -> list[Individual]:
    """Build ``cfg.population_size`` masks with popcounts drawn uniformly from [1, CF].

    For individual i: draw NF_i from {1..CF}, then NF_i distinct bit
    positions uniformly without replacement.
    """
    population = []
    for _ in range(cfg.population_size):
        nf = int(rng.integers(1, cfg.cf + 1))
        mask = np.zeros(cfg.stage_dim, dtype=bool)
        mask[rng.choice(cfg.stage_dim, size=nf, replace=False)] = True
        population.append(Individual(mask))
    return population


def repair_mask(mask: np.ndarray, cf: int, rng: np.random.Generator) -> np.ndarray:
    """Bring *mask* back into ``1 <= popcount <= cf``.

    With EF selected bits: EF > cf → clear RF uniformly chosen selected bits,
    RF drawn uniformly from [EF − cf, EF − 1]; EF = 0 → set one uniformly
    chosen bit. Feasible masks are returned unchanged (as a copy).
    """
    out = np.array(mask, dtype=bool, copy=True)
    ef = int(out.sum())
    if ef > cf:
        rf = int(rng.integers(ef - cf, ef))
        selected = np.flatnonzero(out)
        out[rng.choice(selected, size=rf, replace=False)] = False
    elif ef == 0:
        out[int(rng.integers(out.size))] = True
    return out


def one_point_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    rng: np.random.Generator,
    cf: Optional[int] = None,
    cut: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Swap the tails of two parents at a cut drawn uniformly from {1..D−1}.

    ``child1 = p1[:c] ∥ p2[c:]`` and ``child2 = p2[:c] ∥ p1[c:]``. Pass *cut*
    to fix the cut point; pass *cf* to repair both children.
    """
    p1 = np.asarray(p1, dtype=bool)
    p2 = np.asarray(p2, dtype=bool)
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal length")
    d = p1.size
    if cut is None:
        cut = int(rng.integers(1, d)) if d > 1 else d
    c1 = np.concatenate([p1[:cut], p2[cut:]])
    c2 = np.concatenate([p2[:cut], p1[cut:]])
    if cf is not None:
        c1 = repair_mask(c1, cf, rng)
        c2 = repair_mask(c2, cf, rng)
    return c1, c2


def bitwise_mutation(
    mask: np.ndarray, rate: float, rng: np.random.Generator, cf: Optional[int] = None
) -> np.ndarray:
    """Flip each bit independently with probability *rate*, then repair when *cf* is given."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    m = np.asarray(mask, dtype=bool)
    out = m ^ (rng.random(m.size) < rate)
    if cf is not None:
        out = repair_mask(out, cf, rng)
    return out


def make_offspring(
    population: list[Individual], cfg: EngineConfig, rng: np.random.Generator
) -> list[Individual]:
    """Produce one child per parent by random disjoint pairing, crossover and mutation.

    Draw order per generation: the pairing permutation, then for each pair the
    crossover coin, the cut and the repair draws of both children, then the
    mutation and repair draws of child 1 and of child 2.
    """
    order = rng.permutation(len(population))
    rate = cfg.effective_mutation_rate
    children = []
    for j in range(0, len(order) - 1, 2):
        a = population[order[j]].mask
        b = population[order[j + 1]].mask
        if rng.random() < cfg.crossover_rate:
            c1, c2 = one_point_crossover(a, b, rng, cf=cfg.cf)
        else:
            c1, c2 = a.copy(), b.copy()
        children.append(Individual(bitwise_mutation(c1, rate, rng, cf=cfg.cf)))
        children.append(Individual(bitwise_mutation(c2, rate, rng, cf=cfg.cf)))
    return children
