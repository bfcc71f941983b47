"""``bench`` command line: run an experiment from a JSON/TOML config.

Usage::

    bench run --config experiment.json [--outdir runs/exp1]

Writes ``curve.csv``, ``run.json`` and (with bound diagnostics on)
``bounds.csv`` into the output directory.  Exit codes: 0 success,
2 configuration error, 3 dataset error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bench import ConfigError, ExperimentConfig, run_experiment1, run_experiment2
from .data import DatasetError

CONFIG_ERROR = 2
DATASET_ERROR = 3


def _read_config(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True, type=Path, help="JSON or TOML config")
    run.add_argument(
        "--outdir", type=Path, default=Path("bench-out"), help="artifact directory"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_dict(_read_config(args.config))
        runner = run_experiment1 if config.experiment == 1 else run_experiment2
        artifact = runner(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return DATASET_ERROR
    artifact.write(args.outdir)
    final = artifact.mean_curve[-1]
    print(
        f"{config.dataset} exp{config.experiment} {config.strategy}: "
        f"{len(artifact.curves)} trials, budget {config.budget}, "
        f"final mean accuracy {final:.4f} -> {args.outdir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
