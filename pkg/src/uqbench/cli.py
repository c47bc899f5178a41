"""Command-line entry point; a thin client over the pipeline API.

Subcommands: gen-data, train, eval, sweep, plot, all. Global flags
--config/--seed/--out; flags override config file fields. Exit codes:
0 success, 2 config error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .exceptions import ConfigError, DomainError, MetricError, NumericalDivergenceError
from .pipeline import ExperimentConfig, build_datasets, evaluate, load_config, train_pipeline, write_datasets
from .plots import export_plots
from .jsonio import read_json, write_json_atomic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqbench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"uqbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen-data", "generate the synthetic datasets for a run"),
        ("train", "generate data and train the configured models"),
        ("eval", "run the configured tests against existing checkpoints"),
        ("sweep", "run only the SNR sweep against existing checkpoints"),
        ("plot", "render SVG plots from the result CSVs"),
        ("all", "gen-data + train + eval + plot in one run"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, default=None, help="experiment config JSON")
        cmd.add_argument("--seed", type=int, default=None, help="override the master seed")
        cmd.add_argument("--out", type=Path, default=None, help="override the output directory")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        return load_config(args.config, seed=args.seed, out_dir=None if args.out is None else str(args.out))
    config = ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=str(args.out))
    return config


def _run(args) -> int:
    config = _resolve_config(args)
    run_dir = Path(config.out_dir)
    log = lambda msg: print(f"[uqbench] {msg}")

    if args.command == "gen-data":
        data = build_datasets(config)
        paths = write_datasets(config, data, run_dir)
        for name, rel in paths.items():
            log(f"{name}: {run_dir / rel}")
        return EXIT_OK

    if args.command == "train":
        manifest = train_pipeline(config, run_dir, log=log)
        log(f"manifest: {run_dir / 'manifest.json'} (config hash {manifest['config_hash']})")
        return EXIT_OK

    if args.command in ("eval", "sweep"):
        tests = ("snr-sweep",) if args.command == "sweep" else None
        summaries = evaluate(config, run_dir, tests=tests, log=log)
        for head, summary in summaries.items():
            bits = []
            if summary.uar is not None:
                bits.append(f"UAR={summary.uar:.3f}")
            if summary.auroc_misclassification is not None:
                bits.append(f"AUROC(miscls)={summary.auroc_misclassification:.3f}")
            if summary.auroc_ood is not None:
                bits.append(f"AUROC(ood)={summary.auroc_ood:.3f}")
            log(f"{summary.label}: " + (", ".join(bits) if bits else "done"))
        return EXIT_OK

    if args.command == "plot":
        rels = export_plots(run_dir)
        manifest_path = run_dir / "manifest.json"
        if manifest_path.exists():
            manifest = read_json(manifest_path)
            manifest["artifacts"] = sorted(dict.fromkeys(manifest.get("artifacts", []) + rels))
            write_json_atomic(manifest_path, manifest)
        for rel in rels:
            log(f"plot: {run_dir / rel}")
        return EXIT_OK

    # all
    train_pipeline(config, run_dir, log=log)
    evaluate(config, run_dir, log=log)
    rels = export_plots(run_dir)
    manifest = read_json(run_dir / "manifest.json")
    manifest["artifacts"] = sorted(dict.fromkeys(manifest.get("artifacts", []) + rels))
    write_json_atomic(run_dir / "manifest.json", manifest)
    log(f"run complete: {run_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDivergenceError, DomainError, MetricError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
