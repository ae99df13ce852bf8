"""Shared pytest fixtures."""

from pathlib import Path

import numpy as np
import pytest

from aind_embedding_selector.config import PipelineConfig
from aind_embedding_selector.models.dataset import FeatureDataset, save_csv
from aind_embedding_selector.models.synthetic import SyntheticSpec, synthesize


@pytest.fixture
def line_dataset() -> FeatureDataset:
    """Two 1-D clusters: train A at 0, 1; train B at 10, 11; queries in between."""
    values = np.array([[0.0], [1.0], [10.0], [11.0], [0.5], [10.5], [2.0], [9.0]])
    labels = ["A", "A", "B", "B", "A", "B", "A", "B"]
    splits = ["train"] * 4 + ["validation"] * 2 + ["test"] * 2
    return FeatureDataset(values, labels, splits)


@pytest.fixture
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(
        feature_count=16,
        informative_count=2,
        class_count=2,
        samples_per_split=(8, 4, 4),
        separation=4.0,
        seed=3,
    )


@pytest.fixture
def small_dataset(small_spec: SyntheticSpec) -> FeatureDataset:
    ds, _ = synthesize(small_spec)
    return ds


@pytest.fixture
def pipeline_config(tmp_path: Path, small_dataset: FeatureDataset) -> PipelineConfig:
    """A fast pipeline over a saved synthetic dataset, writing under tmp_path/out."""
    dataset = tmp_path / "data" / "synthetic.csv"
    save_csv(small_dataset, dataset)
    return PipelineConfig(
        dataset=dataset,
        output=tmp_path / "out",
        cf=4,
        nff=6,
        population_size=8,
        generations=3,
        runs=3,
        seed=11,
        fine_population_size=8,
        fine_generations=3,
    )
