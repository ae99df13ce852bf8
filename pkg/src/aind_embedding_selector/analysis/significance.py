"""Paired Wilcoxon signed-rank test.

Zero differences are dropped before ranking; tied absolute differences get
average ranks. With n ≤ ``exact_max_n`` non-zero pairs the p-value comes
from enumerating all 2^n sign assignments of the ranks; above that a normal
approximation with tie-corrected variance and a 0.5 continuity correction
is used.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from aind_embedding_selector.errors import UndefinedInputError

logger = logging.getLogger(__name__)

ALTERNATIVES = ("two-sided", "greater", "less")
EXACT_MAX_N = 12
MIN_PAIRS = 5

# Rank sums are multiples of 0.5; this only absorbs float noise.
_EPS = 1e-9


@dataclass(frozen=True)
class SignedRankResult:
    statistic: float  # sum of ranks of positive differences (a − b > 0)
    p_value: float
    n: int  # non-zero pairs
    method: str  # "exact", "normal" or "degenerate"


def exact_signed_rank_pvalue(
    ranks: Sequence[float], t_plus: float, alternative: str = "two-sided"
) -> float:
    """P-value of *t_plus* under the null by enumerating every sign assignment of *ranks*."""
    r = np.asarray(ranks, dtype=np.float64)
    n = r.size
    signs = np.array(list(itertools.product((0.0, 1.0), repeat=n)), dtype=np.float64)
    null = signs @ r
    center = r.sum() / 2.0
    if alternative == "greater":
        hits = null >= t_plus - _EPS
    elif alternative == "less":
        hits = null <= t_plus + _EPS
    else:
        hits = np.abs(null - center) >= abs(t_plus - center) - _EPS
    return int(np.count_nonzero(hits)) / float(2 ** n)


def _normal_pvalue(ranks: np.ndarray, abs_diff: np.ndarray, t_plus: float, alternative: str):
    n = ranks.size
    center = n * (n + 1) / 4.0
    _, tie_counts = np.unique(abs_diff, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    sd = np.sqrt(variance)
    if alternative == "greater":
        return float(stats.norm.sf((t_plus - center - 0.5) / sd))
    if alternative == "less":
        return float(stats.norm.cdf((t_plus - center + 0.5) / sd))
    return float(min(1.0, 2.0 * stats.norm.sf((abs(t_plus - center) - 0.5) / sd)))


def signed_rank_test(
    paired_a: Sequence[float],
    paired_b: Sequence[float],
    alternative: str = "two-sided",
    exact_max_n: int = EXACT_MAX_N,
) -> SignedRankResult:
    """Full test result for paired samples *paired_a*, *paired_b* (differences a − b).

    Raises
    ------
    UndefinedInputError
        Fewer than 5 non-zero differences remain (unless all are zero, which
        yields p = 1).
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")

    diff = a - b
    diff = diff[diff != 0]
    if diff.size == 0:
        return SignedRankResult(statistic=0.0, p_value=1.0, n=0, method="degenerate")
    if diff.size < MIN_PAIRS:
        raise UndefinedInputError(
            f"signed-rank test needs >= {MIN_PAIRS} non-zero differences, got {diff.size}"
        )

    abs_diff = np.abs(diff)
    ranks = stats.rankdata(abs_diff)
    t_plus = float(ranks[diff > 0].sum())
    if diff.size <= exact_max_n:
        p = exact_signed_rank_pvalue(ranks, t_plus, alternative)
        method = "exact"
    else:
        p = _normal_pvalue(ranks, abs_diff, t_plus, alternative)
        method = "normal"
    p = min(1.0, max(p, np.finfo(np.float64).tiny))
    return SignedRankResult(statistic=t_plus, p_value=p, n=int(diff.size), method=method)


def wilcoxon_signed_rank(
    paired_a: Sequence[float], paired_b: Sequence[float], alternative: str = "two-sided"
) -> float:
    """P-value of the paired signed-rank test (two-sided by default)."""
    return signed_rank_test(paired_a, paired_b, alternative).p_value


def per_class_wilcoxon(
    per_class_a: Sequence[Mapping[str, float]],
    per_class_b: Sequence[Mapping[str, float]],
    alternative: str = "two-sided",
    class_ids: Optional[Sequence[str]] = None,
) -> dict[str, Optional[SignedRankResult]]:
    """Paired test per class over runs; ``None`` where the test is undefined.

    Entry i of each sequence holds the per-class F1 of run i. *class_ids*
    fixes the classes tested and their order (a class missing from a run
    scores 0); by default the classes present on both sides, sorted.
    """
    if len(per_class_a) != len(per_class_b):
        raise ValueError("per-class sequences must pair runs one to one")
    if class_ids is None:
        class_ids = (
            sorted(set().union(*per_class_a) & set().union(*per_class_b)) if per_class_a else []
        )
    out: dict[str, Optional[SignedRankResult]] = {}
    for cls in class_ids:
        a = [row.get(cls, 0.0) for row in per_class_a]
        b = [row.get(cls, 0.0) for row in per_class_b]
        try:
            out[cls] = signed_rank_test(a, b, alternative)
        except UndefinedInputError as exc:
            logger.warning("class %s: %s", cls, exc)
            out[cls] = None
    return out
