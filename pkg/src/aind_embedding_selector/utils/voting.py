"""Majority vote over retrieved neighbours."""

from collections import Counter
from typing import Hashable, Sequence


def majority_vote(ordered_labels: Sequence[Hashable]) -> Hashable:
    """Return the most frequent label among *ordered_labels*.

    *ordered_labels* must be sorted nearest-first. When several labels share
    the highest count, the winner is the tied label that appears first, i.e.
    the label of the single nearest neighbour among the tied classes.
    """
    if not ordered_labels:
        raise ValueError("cannot vote over an empty neighbour list")

    counter = Counter(ordered_labels)
    max_count = max(counter.values())
    leaders = {lbl for lbl, cnt in counter.items() if cnt == max_count}
    for lbl in ordered_labels:
        if lbl in leaders:
            return lbl
    raise AssertionError("unreachable")  # pragma: no cover
