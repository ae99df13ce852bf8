"""Tests for engine/operators.py."""

import numpy as np
import pytest

from aind_embedding_selector.config import EngineConfig
from aind_embedding_selector.engine.operators import (
    bitwise_mutation,
    init_population,
    make_offspring,
    one_point_crossover,
    repair_mask,
)


def _bits(text: str) -> np.ndarray:
    return np.array([c == "1" for c in text])


def _text(mask: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in mask)


class TestInitPopulation:
    def test_popcounts_within_cap(self) -> None:
        cfg = EngineConfig(stage_dim=10, cf=3, population_size=4)
        population = init_population(cfg, np.random.default_rng(5))
        assert len(population) == 4
        for ind in population:
            assert ind.mask.shape == (10,)
            assert 1 <= ind.popcount <= 3

    def test_cf_one_gives_single_bits(self) -> None:
        cfg = EngineConfig(stage_dim=20, cf=1, population_size=8)
        assert {ind.popcount for ind in init_population(cfg, np.random.default_rng(0))} == {1}

    def test_deterministic_per_seed(self) -> None:
        cfg = EngineConfig(stage_dim=30, cf=5, population_size=6)
        a = init_population(cfg, np.random.default_rng(9))
        b = init_population(cfg, np.random.default_rng(9))
        assert [_text(x.mask) for x in a] == [_text(y.mask) for y in b]


class TestRepair:
    def test_feasible_mask_unchanged(self) -> None:
        mask = np.zeros(100, dtype=bool)
        mask[:40] = True
        assert np.array_equal(repair_mask(mask, 50, np.random.default_rng(0)), mask)

    def test_excess_bits_removed_from_selected_only(self) -> None:
        rng = np.random.default_rng(1)
        mask = np.zeros(100, dtype=bool)
        mask[rng.choice(100, size=60, replace=False)] = True
        for _ in range(50):
            out = repair_mask(mask, 50, rng)
            assert 1 <= out.sum() <= 50
            assert not np.any(out & ~mask)

    def test_empty_mask_gets_one_bit(self) -> None:
        out = repair_mask(np.zeros(12, dtype=bool), 3, np.random.default_rng(2))
        assert out.sum() == 1

    def test_input_not_modified(self) -> None:
        mask = np.ones(8, dtype=bool)
        repair_mask(mask, 2, np.random.default_rng(3))
        assert mask.all()


class TestCrossover:
    def test_fixed_cut(self) -> None:
        c1, c2 = one_point_crossover(_bits("0000"), _bits("1111"), np.random.default_rng(0), cut=2)
        assert (_text(c1), _text(c2)) == ("0011", "1100")

    def test_identical_parents(self) -> None:
        p = _bits("0110100")
        c1, c2 = one_point_crossover(p, p.copy(), np.random.default_rng(4))
        assert np.array_equal(c1, p) and np.array_equal(c2, p)

    def test_children_take_each_bit_from_a_parent(self) -> None:
        rng = np.random.default_rng(6)
        for _ in range(100):
            p1 = rng.random(16) < 0.5
            p2 = rng.random(16) < 0.5
            c1, c2 = one_point_crossover(p1, p2, rng)
            assert np.all((c1 == p1) | (c1 == p2))
            assert np.all((c2 == p1) | (c2 == p2))
            # the two children partition the parents' bits between them
            assert np.array_equal(c1.astype(int) + c2.astype(int), p1.astype(int) + p2.astype(int))

    def test_repair_applied_when_cf_given(self) -> None:
        rng = np.random.default_rng(7)
        c1, c2 = one_point_crossover(_bits("11110000"), _bits("00001111"), rng, cf=2)
        assert 1 <= c1.sum() <= 2 and 1 <= c2.sum() <= 2

    def test_length_mismatch(self) -> None:
        with pytest.raises(ValueError):
            one_point_crossover(_bits("01"), _bits("011"), np.random.default_rng(0))


class TestMutation:
    def test_zero_rate_unchanged(self) -> None:
        mask = _bits("0101100")
        assert np.array_equal(bitwise_mutation(mask, 0.0, np.random.default_rng(0)), mask)

    def test_rate_one_complements(self) -> None:
        mask = _bits("111100")
        out = bitwise_mutation(mask, 1.0, np.random.default_rng(0), cf=3)
        assert _text(out) == "000011"

    def test_mean_flip_count(self) -> None:
        rng = np.random.default_rng(8)
        mask = np.zeros(1000, dtype=bool)
        flips = [bitwise_mutation(mask, 0.05, rng).sum() for _ in range(2000)]
        assert abs(np.mean(flips) - 50.0) < 1.0

    def test_rate_out_of_range(self) -> None:
        with pytest.raises(ValueError):
            bitwise_mutation(_bits("01"), 1.5, np.random.default_rng(0))


def test_make_offspring_respects_cap() -> None:
    cfg = EngineConfig(stage_dim=40, cf=4, population_size=10, mutation_rate=0.2)
    rng = np.random.default_rng(10)
    population = init_population(cfg, rng)
    for _ in range(20):
        children = make_offspring(population, cfg, rng)
        assert len(children) == cfg.population_size
        assert all(1 <= c.popcount <= cfg.cf for c in children)
        population = children
