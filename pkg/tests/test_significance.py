"""Tests for analysis/significance.py."""

import numpy as np
import pytest
from scipy import stats

from aind_embedding_selector.analysis.significance import (
    exact_signed_rank_pvalue,
    per_class_wilcoxon,
    signed_rank_test,
    wilcoxon_signed_rank,
)
from aind_embedding_selector.errors import UndefinedInputError


class TestSignedRank:
    def test_identical_samples(self) -> None:
        result = signed_rank_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
        assert result.p_value == 1.0
        assert result.method == "degenerate"

    def test_five_positive_differences(self) -> None:
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        b = [0.0, 0.0, 0.0, 0.0, 0.0]
        assert wilcoxon_signed_rank(a, b) == pytest.approx(2 / 32)
        assert wilcoxon_signed_rank(a, b, "greater") == pytest.approx(1 / 32)
        assert wilcoxon_signed_rank(a, b, "less") == pytest.approx(1.0)

    def test_zero_differences_are_dropped(self) -> None:
        a = [1.0, 2.0, 3.0, 4.0, 5.0, 7.0]
        b = [0.0, 0.0, 0.0, 0.0, 0.0, 7.0]
        result = signed_rank_test(a, b)
        assert result.n == 5
        assert result.p_value == pytest.approx(0.0625)

    def test_too_few_pairs(self) -> None:
        with pytest.raises(UndefinedInputError):
            signed_rank_test([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])

    def test_swapping_samples_keeps_two_sided_p(self) -> None:
        rng = np.random.default_rng(0)
        a, b = rng.random(9), rng.random(9)
        assert wilcoxon_signed_rank(a, b) == pytest.approx(wilcoxon_signed_rank(b, a))

    def test_matches_scipy_exact(self) -> None:
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=8), rng.normal(size=8)
        expected = stats.wilcoxon(a, b, method="exact").pvalue
        assert wilcoxon_signed_rank(a, b) == pytest.approx(expected)

    def test_normal_approximation_close_to_exact(self) -> None:
        diffs = np.array([1, -2, 3, 4, -5, 6, 7, 8, -9, 10, 11, 12, -13, 14, 15, 16], float)
        exact = signed_rank_test(diffs, np.zeros(16), exact_max_n=16)
        approx = signed_rank_test(diffs, np.zeros(16), exact_max_n=12)
        assert exact.method == "exact" and approx.method == "normal"
        assert abs(exact.p_value - approx.p_value) < 0.02

    def test_tied_ranks(self) -> None:
        """Average ranks 1.5, 1.5, 3, 4, 5 with one negative: T+ = 13.5 of 15."""
        result = signed_rank_test([1.0, -1.0, 2.0, 3.0, 4.0], [0.0] * 5)
        assert result.statistic == 13.5
        # T+ <= 1.5 for 3 of 32 sign patterns, T+ >= 13.5 for their 3 complements
        assert result.p_value == pytest.approx(6 / 32)

    def test_p_value_range(self) -> None:
        rng = np.random.default_rng(2)
        for n in (5, 12, 13, 30):
            p = wilcoxon_signed_rank(rng.random(n), rng.random(n))
            assert 0.0 < p <= 1.0

    def test_bad_alternative(self) -> None:
        with pytest.raises(ValueError):
            signed_rank_test([1.0] * 5, [0.0] * 5, alternative="sideways")


def test_exact_enumeration_small() -> None:
    # ranks 1, 2: null sums {0, 1, 2, 3}; T+ = 3 is as extreme as 0
    assert exact_signed_rank_pvalue([1.0, 2.0], 3.0) == 0.5
    assert exact_signed_rank_pvalue([1.0, 2.0], 3.0, "greater") == 0.25


def test_per_class_wilcoxon() -> None:
    fine = [{"a": 0.9, "b": 0.5}] * 5
    coarse = [{"a": 0.1 * i, "b": 0.5} for i in range(5)]
    result = per_class_wilcoxon(fine, coarse)
    assert result["a"].p_value == pytest.approx(0.0625)
    assert result["a"].method == "exact"
    assert result["b"].p_value == 1.0
    assert result["b"].method == "degenerate"


def test_per_class_wilcoxon_class_order() -> None:
    fine = [{"b": 0.9}] * 5
    coarse = [{"a": 0.5, "b": 0.1 * i} for i in range(5)]
    result = per_class_wilcoxon(fine, coarse, "greater", class_ids=["b", "a"])
    assert list(result) == ["b", "a"]
    assert result["b"].p_value == pytest.approx(0.03125)
    # the missing class scores 0 in every fine run
    assert result["a"].statistic == 0.0


def test_per_class_wilcoxon_undefined_class() -> None:
    result = per_class_wilcoxon([{"a": 1.0}] * 3, [{"a": 0.0}] * 3)
    assert result == {"a": None}
