"""Individuals (binary feature masks) and the nondominated fronts built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from aind_embedding_selector.engine.retrieval import ObjectiveVector

STAGES = ("coarse", "fine")


@dataclass(eq=False)
class Individual:
    """A binary feature mask and, once evaluated, its objective values."""

    mask: np.ndarray
    objectives: Optional[ObjectiveVector] = None

    def __post_init__(self) -> None:
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None

    @property
    def popcount(self) -> int:
        return int(self.mask.sum())

    def selected_features(self) -> list[int]:
        """Selected feature indices, strictly ascending."""
        return [int(i) for i in np.flatnonzero(self.mask)]

    def mask_key(self) -> bytes:
        """Hashable identity of the mask, used to collapse duplicates."""
        return np.packbits(self.mask).tobytes() + self.mask.size.to_bytes(4, "little")


@dataclass
class ParetoFront:
    """Mutually nondominated individuals returned by one engine run.

    Masks are always expressed over the original feature space, even for the
    fine stage; ``stage_dim`` is the dimension the feature fraction was
    scaled by.
    """

    solutions: list = field(default_factory=list)
    run_id: int = 0
    stage: str = "coarse"
    seed: int = 0
    stage_dim: int = 0
    evaluations: int = 0

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}, got {self.stage!r}")

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self) -> Iterator[Individual]:
        return iter(self.solutions)

    @property
    def feature_count(self) -> int:
        """Length of the (original-space) masks, or 0 for an empty front."""
        return int(self.solutions[0].mask.size) if self.solutions else 0

    def subsets(self) -> list[frozenset]:
        """Distinct selected-feature sets on this front, in member order."""
        seen: set = set()
        out = []
        for ind in self.solutions:
            s = frozenset(ind.selected_features())
            if s not in seen:
                seen.add(s)
                out.append(s)
        return out
