"""Command-line front end.

    embedding-selector synth  --dim 64 --informative 4 --classes 3 --seed 7 --out data.csv
    embedding-selector mfv    patches.csv --out mfv.csv
    embedding-selector very-coarse --config pipeline.conf
    embedding-selector coarse --config pipeline.conf
    embedding-selector ffh    --config pipeline.conf
    embedding-selector fine   --config pipeline.conf
    embedding-selector report --config pipeline.conf [--split test]
    embedding-selector export --config pipeline.conf --stage fine --run 0 --out masked.csv
    embedding-selector run    --config pipeline.conf

Stage commands take their settings from ``--config`` (see
:mod:`aind_embedding_selector.config`); flags given on the command line
override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from aind_embedding_selector import __version__, pipeline
from aind_embedding_selector.analysis.significance import ALTERNATIVES
from aind_embedding_selector.config import PipelineConfig
from aind_embedding_selector.errors import EmbeddingSelectorError
from aind_embedding_selector.models.dataset import SPLITS, ColumnSchema
from aind_embedding_selector.models.front import STAGES
from aind_embedding_selector.models.synthetic import CODINGS, SyntheticSpec

logger = logging.getLogger(__name__)

EXIT_ERROR = 2

# CLI flag (argparse dest) → config file key.
_OVERRIDES = {
    "dataset": "dataset",
    "output": "output",
    "class_ids": "classes",
    "dim": "dim",
    "cf": "cf",
    "nff": "nff",
    "population_size": "np",
    "generations": "generations",
    "max_evaluations": "max_evaluations",
    "mutation_rate": "mutation_rate",
    "k": "k",
    "runs": "r",
    "seed": "seed",
    "fine_population_size": "fine_np",
    "fine_generations": "fine_generations",
    "workers": "workers",
    "eval_workers": "eval_workers",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value pipeline config file")
    p.add_argument("--dataset", type=Path, help="dataset CSV")
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--classes", dest="class_ids",
                   help="comma-separated class IDs to keep (default: all)")
    p.add_argument("--dim", type=int, help="expected feature count D")
    p.add_argument("--cf", type=int, help="max selected features in the coarse stage")
    p.add_argument("--nff", type=int, help="frequent features searched by the fine stage")
    p.add_argument("--np", dest="population_size", type=int, help="coarse population size")
    p.add_argument("--generations", type=int, help="coarse generation budget")
    p.add_argument("--max-evaluations", type=int, help="evaluation cap per run")
    p.add_argument("--mutation-rate", type=float, help="per-bit flip probability")
    p.add_argument("--k", type=int, help="neighbours retrieved per query")
    p.add_argument("--runs", "-r", type=int, help="independent runs per stage")
    p.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    p.add_argument("--fine-np", dest="fine_population_size", type=int,
                   help="fine population size")
    p.add_argument("--fine-generations", type=int, help="fine generation budget")
    p.add_argument("--workers", type=int, help="runs executed concurrently")
    p.add_argument("--eval-workers", type=int, help="threads evaluating children")


def load_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file (if any) with command-line flags applied on top."""
    overrides = {
        key: str(getattr(args, dest))
        for dest, key in _OVERRIDES.items()
        if getattr(args, dest, None) is not None
    }
    if args.config is not None:
        cfg = PipelineConfig.from_file(args.config, overrides)
    else:
        cfg = PipelineConfig.from_mapping(overrides)
    cfg.validate()
    return cfg


def _schema(args: argparse.Namespace) -> ColumnSchema:
    return ColumnSchema(label=args.label_column, split=args.split_column, group=args.group_column)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        feature_count=args.dim,
        informative_count=args.informative,
        class_count=args.classes,
        samples_per_split=tuple(args.samples),
        separation=args.separation,
        noise_sd=args.noise,
        seed=args.seed,
        patches_per_sample=args.patches,
        coding=args.coding,
        redundancy=args.redundancy,
        nuisance_sd=args.nuisance_noise,
    )
    truth = args.truth if args.truth is not None else args.out.with_suffix(".truth.json")
    ds = pipeline.synth(spec, args.out, truth)
    logger.info("Wrote %d rows × %d features to %s", ds.sample_count, ds.feature_count, args.out)
    return 0


def cmd_mfv(args: argparse.Namespace) -> int:
    pipeline.mfv(args.dataset, args.out, _schema(args))
    return 0


def cmd_very_coarse(args: argparse.Namespace) -> int:
    pipeline.very_coarse_stage(load_config(args))
    return 0


def cmd_coarse(args: argparse.Namespace) -> int:
    pipeline.coarse_stage(load_config(args))
    return 0


def cmd_ffh(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    archive = args.archive if args.archive is not None else cfg.coarse_dir
    pipeline.ffh_stage(archive, cfg.nff, cfg.ffh_file, cfg.ffh_top_file)
    return 0


def cmd_fine(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    pipeline.fine_stage(cfg, ffh_path=args.ffh)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    pipeline.report(load_config(args), split=args.split, alternative=args.alternative)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    ds = pipeline.load_dataset(cfg)
    pipeline.export(ds, cfg.stage_dir(args.stage), args.run, args.out, split=args.split)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    pipeline.run_all(load_config(args), split=args.split, alternative=args.alternative)
    return 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedding-selector",
        description="Two-stage evolutionary feature selection over embedding vectors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("synth", help="write a planted-feature dataset and its ground truth")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--informative", type=int, default=4)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--samples", type=int, nargs=3, default=[40, 20, 20],
                   metavar=("TRAIN", "VALIDATION", "TEST"),
                   help="samples per class in each split")
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--noise", type=float, default=1.0, help="noise sd of informative features")
    p.add_argument("--nuisance-noise", type=float,
                   help="noise sd of the other features (default: --noise)")
    p.add_argument("--coding", choices=CODINGS, default="ordinal",
                   help="how informative factors place the class centers")
    p.add_argument("--redundancy", type=int, default=1,
                   help="copies of each informative factor, increasingly noisy")
    p.add_argument("--patches", type=int, default=1, help="patch rows per sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="dataset CSV to write")
    p.add_argument("--truth", type=Path, help="ground-truth JSON (default: <out>.truth.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mfv", help="aggregate patch rows into mean feature vectors")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--split-column", default="split")
    p.add_argument("--group-column", default="group")
    p.set_defaults(func=cmd_mfv)

    p = sub.add_parser("very-coarse", help="one run over all features without the CF cap")
    _add_config_flags(p)
    p.set_defaults(func=cmd_very_coarse)

    p = sub.add_parser("coarse", help="R constrained runs over all features")
    _add_config_flags(p)
    p.set_defaults(func=cmd_coarse)

    p = sub.add_parser("ffh", help="frequent-features histogram of the coarse fronts")
    _add_config_flags(p)
    p.add_argument("--archive", type=Path, help="stage directory (default: {output}/coarse)")
    p.set_defaults(func=cmd_ffh)

    p = sub.add_parser("fine", help="R unconstrained runs over the top-NFF features")
    _add_config_flags(p)
    p.add_argument("--ffh", type=Path, help="histogram CSV (default: {output}/ffh.csv)")
    p.set_defaults(func=cmd_fine)

    for name, func, help_text in (
        ("report", cmd_report, "evaluation bundle for the stored stages"),
        ("run", cmd_run, "coarse, ffh, fine and report in one go"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        p.add_argument("--split", choices=SPLITS, default="test")
        p.add_argument("--alternative", choices=ALTERNATIVES, default="two-sided")
        p.set_defaults(func=func)

    p = sub.add_parser("export", help="per-sample masked features of one run's best subset")
    _add_config_flags(p)
    p.add_argument("--stage", choices=STAGES, default="fine")
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--split", choices=SPLITS, help="only rows of this split (default: all)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except EmbeddingSelectorError as exc:
        logger.error("%s", exc)
        return EXIT_ERROR
