"""Desk-scale synthetic stand-in for deep-embedding datasets with planted signal."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from aind_embedding_selector.errors import ConfigError
from aind_embedding_selector.models.dataset import SPLITS, FeatureDataset

CODINGS = ("ordinal", "binary")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a planted-feature classification dataset.

    Informative features are grouped into ``informative_count / redundancy``
    factors. Under ``ordinal`` coding every factor puts class ``c`` at
    ``c * separation``; under ``binary`` coding factor ``j`` puts it at
    ``separation`` times bit ``j mod B`` of ``c`` (``B`` bits number the
    classes), so only factors covering every bit tell all classes apart.
    Copy ``m`` of a factor has noise ``noise_sd * (1 + m)``. Every other
    feature is drawn around 0 with ``nuisance_sd`` (default ``noise_sd``).

    With ``patches_per_sample > 1`` each sample is emitted as that many patch
    rows sharing a group ID, ready for mean-feature-vector aggregation.
    """

    feature_count: int = 64
    informative_count: int = 4
    class_count: int = 3
    samples_per_split: tuple = (40, 20, 20)
    separation: float = 3.0
    noise_sd: float = 1.0
    seed: int = 0
    patches_per_sample: int = 1
    coding: str = "ordinal"
    redundancy: int = 1
    nuisance_sd: Optional[float] = None

    @property
    def factor_count(self) -> int:
        return self.informative_count // self.redundancy

    @property
    def code_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.class_count)))

    def validate(self) -> None:
        if self.feature_count < 1:
            raise ConfigError("feature_count must be >= 1")
        if not 0 <= self.informative_count <= self.feature_count:
            raise ConfigError(
                f"informative_count must be in [0, {self.feature_count}], "
                f"got {self.informative_count}"
            )
        if self.class_count < 2:
            raise ConfigError("class_count must be >= 2")
        if not self.separation > 0:
            raise ConfigError("separation must be > 0")
        if not self.noise_sd > 0:
            raise ConfigError("noise_sd must be > 0")
        if self.nuisance_sd is not None and not self.nuisance_sd > 0:
            raise ConfigError("nuisance_sd must be > 0")
        if len(self.samples_per_split) != len(SPLITS) or any(
            int(n) < 0 for n in self.samples_per_split
        ):
            raise ConfigError("samples_per_split must be three non-negative counts")
        if self.patches_per_sample < 1:
            raise ConfigError("patches_per_sample must be >= 1")
        if self.coding not in CODINGS:
            raise ConfigError(f"coding must be one of {CODINGS}, got {self.coding!r}")
        if self.redundancy < 1 or self.informative_count % self.redundancy:
            raise ConfigError(
                f"redundancy must be >= 1 and divide informative_count={self.informative_count}"
            )
        if self.coding == "binary" and self.factor_count < self.code_bits:
            raise ConfigError(
                f"binary coding of {self.class_count} classes needs >= {self.code_bits} "
                f"factors, got {self.factor_count}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["samples_per_split"] = [int(n) for n in self.samples_per_split]
        return d


def _draw_informative(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    # Draw position i is copy i // F of factor i % F.
    return rng.choice(spec.feature_count, size=spec.informative_count, replace=False)


def factor_groups(spec: SyntheticSpec) -> list[list[int]]:
    """Informative feature indices per factor, least noisy copy first."""
    spec.validate()
    drawn = _draw_informative(np.random.default_rng(spec.seed), spec)
    f = spec.factor_count
    return [[int(i) for i in drawn[j::f]] for j in range(f)]


def _class_centers(spec: SyntheticSpec, drawn: np.ndarray) -> np.ndarray:
    centers = np.zeros((spec.class_count, spec.feature_count))
    f = spec.factor_count
    for position, feature in enumerate(drawn):
        factor = position % f
        for c in range(spec.class_count):
            if spec.coding == "binary":
                level = (c >> (factor % spec.code_bits)) & 1
            else:
                level = c
            centers[c, feature] = level * spec.separation
    return centers


def _feature_sd(spec: SyntheticSpec, drawn: np.ndarray) -> np.ndarray:
    nuisance = spec.noise_sd if spec.nuisance_sd is None else spec.nuisance_sd
    sd = np.full(spec.feature_count, float(nuisance))
    f = spec.factor_count
    for position, feature in enumerate(drawn):
        sd[feature] = spec.noise_sd * (1 + position // f)
    return sd


def synthesize(spec: SyntheticSpec) -> tuple[FeatureDataset, list[int]]:
    """Generate a dataset from *spec*; returns ``(dataset, informative_indices)``.

    Draw order (single generator seeded with ``spec.seed``): the informative
    index set, then for each split in (train, validation, test), each class in
    order, each sample, one ``(patches_per_sample, D)`` standard-normal block
    scaled per feature.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    d = spec.feature_count
    drawn = _draw_informative(rng, spec)
    centers = _class_centers(spec, drawn)
    sd = _feature_sd(spec, drawn)

    width = len(str(spec.class_count - 1))
    class_names = [f"class_{c:0{width}d}" for c in range(spec.class_count)]

    blocks, labels, splits, groups = [], [], [], []
    for split, per_class in zip(SPLITS, spec.samples_per_split):
        for c, name in enumerate(class_names):
            for s in range(int(per_class)):
                noise = rng.normal(0.0, 1.0, size=(spec.patches_per_sample, d)) * sd
                blocks.append(centers[c] + noise)
                labels += [name] * spec.patches_per_sample
                splits += [split] * spec.patches_per_sample
                groups += [f"{split}-{name}-{s:05d}"] * spec.patches_per_sample

    values = np.vstack(blocks) if blocks else np.zeros((0, d))
    ds = FeatureDataset(
        values=values,
        labels=labels,
        splits=splits,
        groups=groups if spec.patches_per_sample > 1 else None,
    )
    return ds, sorted(int(i) for i in drawn)
