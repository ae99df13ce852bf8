"""Engine and pipeline configuration.

Pipeline settings are read from a flat ``key = value`` text file (``#``
starts a comment) and may be overridden by command-line flags. Paths default
to sensible local values but can be overridden by environment variables so
the same config file works on any machine/mount point:

    EMBSEL_DATASET       Dataset CSV used when the config omits ``dataset``
    EMBSEL_OUTPUT_ROOT   Output directory used when the config omits ``output``
                         (default: ./out)

Config keys
-----------
    dataset            path to the dataset CSV (relative paths resolve against the
                       config file's directory)
    output             output directory (resolved like ``dataset``)
    classes            comma-separated class IDs; the dataset is restricted to them
                       (one category's sub-problem)
    dim                expected feature count D (checked against the dataset)
    cf                 max selected features during the coarse stage (CF)
    nff                number of frequent features searched by the fine stage
    np                 coarse population size (even, >= 4)
    generations        coarse generation budget
    max_evaluations    optional cap on fitness evaluations per run
    mutation_rate      per-bit flip probability (default 1/D of each stage)
    crossover_rate     probability a parent pair is recombined
    k                  neighbours retrieved per query
    r                  number of independent coarse runs
    seed               base seed; run i uses seed + i
    query_split        split searched against ``train`` during optimization
    fine_np            fine population size
    fine_generations   fine generation budget
    workers            coarse/fine runs executed concurrently
    eval_workers       threads evaluating children within a generation

Output layout
-------------
    {output}/coarse/run_{id}.jsonl, {output}/coarse/manifest.json
    {output}/fine/run_{id}.jsonl,   {output}/fine/manifest.json
    {output}/very_coarse/run_0000.jsonl, {output}/very_coarse/manifest.json
    {output}/ffh.csv, {output}/ffh_top.csv
    {output}/report/*.csv, {output}/report/summary.json
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from aind_embedding_selector.errors import ConfigError

_SECTION = "pipeline"


def _class_list(raw: Any) -> tuple[str, ...]:
    items = raw.split(",") if isinstance(raw, str) else list(raw)
    return tuple(str(c).strip() for c in items if str(c).strip())


@dataclass(frozen=True)
class EngineConfig:
    """Parameters of one evolutionary run over a ``stage_dim``-feature space."""

    stage_dim: int
    cf: int
    population_size: int = 50
    max_generations: int = 1000
    mutation_rate: Optional[float] = None  # None → 1 / stage_dim
    crossover_rate: float = 1.0
    k: int = 3
    seed: int = 0
    max_evaluations: Optional[int] = None
    query_split: str = "validation"
    eval_workers: int = 1

    def validate(self) -> None:
        """Raise :class:`ConfigError` unless every invariant holds."""
        if self.stage_dim < 1:
            raise ConfigError("stage_dim must be >= 1")
        if not 1 <= self.cf <= self.stage_dim:
            raise ConfigError(f"cf must be in [1, {self.stage_dim}], got {self.cf}")
        if self.population_size < 4 or self.population_size % 2:
            raise ConfigError(f"population size must be even and >= 4, got {self.population_size}")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if not 0.0 <= self.effective_mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must be in [0, 1]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must be in [0, 1]")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_evaluations is not None and self.max_evaluations < self.population_size:
            raise ConfigError("max_evaluations must allow at least the initial population")
        if self.query_split not in ("validation", "test"):
            raise ConfigError("query_split must be 'validation' or 'test'")
        if self.eval_workers < 1:
            raise ConfigError("eval_workers must be >= 1")

    @property
    def effective_mutation_rate(self) -> float:
        if self.mutation_rate is None:
            return 1.0 / self.stage_dim
        return float(self.mutation_rate)

    def with_overrides(self, **changes: Any) -> "EngineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Plain mapping of the search-relevant settings (worker counts excluded)."""
        d = dataclasses.asdict(self)
        d.pop("eval_workers")
        d["mutation_rate"] = self.effective_mutation_rate
        return d


# key in the config file → (PipelineConfig field, parser)
_KEYS: dict[str, tuple[str, Any]] = {
    "dataset": ("dataset", Path),
    "output": ("output", Path),
    "classes": ("classes", _class_list),
    "dim": ("dim", int),
    "cf": ("cf", int),
    "nff": ("nff", int),
    "np": ("population_size", int),
    "generations": ("generations", int),
    "max_evaluations": ("max_evaluations", int),
    "mutation_rate": ("mutation_rate", float),
    "crossover_rate": ("crossover_rate", float),
    "k": ("k", int),
    "r": ("runs", int),
    "seed": ("seed", int),
    "query_split": ("query_split", str),
    "fine_np": ("fine_population_size", int),
    "fine_generations": ("fine_generations", int),
    "workers": ("workers", int),
    "eval_workers": ("eval_workers", int),
}


@dataclass
class PipelineConfig:
    """Settings of the full coarse → FFH → fine → report pipeline."""

    dataset: Optional[Path] = None
    output: Path = field(default_factory=lambda: Path("./out"))
    classes: Optional[tuple[str, ...]] = None
    dim: Optional[int] = None
    cf: int = 50
    nff: int = 30
    population_size: int = 50
    generations: int = 1000
    max_evaluations: Optional[int] = None
    mutation_rate: Optional[float] = None
    crossover_rate: float = 1.0
    k: int = 3
    runs: int = 10
    seed: int = 0
    query_split: str = "validation"
    fine_population_size: int = 30
    fine_generations: int = 1000
    workers: int = 1
    eval_workers: int = 1

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_environment(cls) -> "PipelineConfig":
        """Defaults, with dataset/output taken from the environment when set."""
        dataset = os.environ.get("EMBSEL_DATASET")
        return cls(
            dataset=Path(dataset) if dataset else None,
            output=Path(os.environ.get("EMBSEL_OUTPUT_ROOT", "./out")),
        )

    @classmethod
    def from_mapping(
        cls, values: Mapping[str, Any], base: Optional["PipelineConfig"] = None
    ) -> "PipelineConfig":
        """Apply config-file style *values* (keys as documented above) on top of *base*."""
        cfg = base if base is not None else cls.from_environment()
        changes: dict[str, Any] = {}
        for key, raw in values.items():
            if raw is None:
                continue
            key = key.strip().lower()
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            name, parse = _KEYS[key]
            try:
                changes[name] = parse(raw.strip() if isinstance(raw, str) else raw)
            except (TypeError, ValueError):
                raise ConfigError(f"invalid value for {key!r}: {raw!r}") from None
        return dataclasses.replace(cfg, **changes)

    @classmethod
    def from_file(
        cls, path: Path, overrides: Optional[Mapping[str, Any]] = None
    ) -> "PipelineConfig":
        """Read a flat key-value file; *overrides* (e.g. CLI flags) win over file values."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(
            comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
        )
        try:
            parser.read_string(f"[{_SECTION}]\n" + path.read_text(encoding="utf-8"))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        values = dict(parser.items(_SECTION))
        cfg = cls.from_mapping(values)
        # Paths written in the file are relative to the file, not the working directory.
        for key in ("dataset", "output"):
            value = getattr(cfg, key)
            if key in values and value is not None and not value.is_absolute():
                cfg = dataclasses.replace(cfg, **{key: path.parent / value})
        if overrides:
            cfg = cls.from_mapping(overrides, base=cfg)
        return cfg

    # ------------------------------------------------------------------
    # Derived engine configs
    # ------------------------------------------------------------------

    def validate(self) -> None:
        if self.runs < 1:
            raise ConfigError("r must be >= 1")
        if self.nff < 1:
            raise ConfigError("nff must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.classes is not None and len(set(self.classes)) < 2:
            raise ConfigError("classes must name at least two distinct class IDs")

    def coarse_config(self, stage_dim: int) -> EngineConfig:
        """Engine config for the coarse stage over a *stage_dim*-feature dataset."""
        if self.dim is not None and self.dim != stage_dim:
            raise ConfigError(f"config dim={self.dim} but dataset has D={stage_dim}")
        cfg = EngineConfig(
            stage_dim=stage_dim,
            cf=min(self.cf, stage_dim),
            population_size=self.population_size,
            max_generations=self.generations,
            mutation_rate=self.mutation_rate,
            crossover_rate=self.crossover_rate,
            k=self.k,
            seed=self.seed,
            max_evaluations=self.max_evaluations,
            query_split=self.query_split,
            eval_workers=self.eval_workers,
        )
        cfg.validate()
        return cfg

    def fine_config(self, nff: int) -> EngineConfig:
        """Engine config for the fine stage: CF = stage_dim = *nff* (constraint vacuous).

        The mutation rate is left unset when it was not given explicitly so it
        defaults to 1 / NFF rather than 1 / D.
        """
        cfg = EngineConfig(
            stage_dim=nff,
            cf=nff,
            population_size=self.fine_population_size,
            max_generations=self.fine_generations,
            mutation_rate=self.mutation_rate,
            crossover_rate=self.crossover_rate,
            k=self.k,
            seed=self.seed,
            max_evaluations=self.max_evaluations,
            query_split=self.query_split,
            eval_workers=self.eval_workers,
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        """Search settings only; paths and worker counts do not affect results."""
        d = dataclasses.asdict(self)
        for transient in ("dataset", "output", "workers", "eval_workers"):
            d.pop(transient)
        if self.classes is not None:
            d["classes"] = list(self.classes)
        return d

    # ------------------------------------------------------------------
    # Output layout
    # ------------------------------------------------------------------

    @property
    def coarse_dir(self) -> Path:
        return self.output / "coarse"

    @property
    def fine_dir(self) -> Path:
        return self.output / "fine"

    @property
    def very_coarse_dir(self) -> Path:
        return self.output / "very_coarse"

    def stage_dir(self, stage: str) -> Path:
        return self.output / stage

    @property
    def ffh_file(self) -> Path:
        return self.output / "ffh.csv"

    @property
    def ffh_top_file(self) -> Path:
        return self.output / "ffh_top.csv"

    @property
    def report_dir(self) -> Path:
        return self.output / "report"
