"""Command-line harness: ``python -m maxsens <subcommand> CONFIG [options]``.

Subcommands
-----------
simulate    dump raw draws of the configured field (sim_id, site_id, value[, storm...])
lrm         run the configuration with the likelihood-ratio method
ipa         run the configuration with the pathwise (IPA) method
oracle      exact correlation and sensitivities only
experiment  run the method named in the configuration
validate    check the configuration and exit

Exit status: 0 on success, 2 for an invalid configuration, 3 for a numerical
failure and 1 when an output file cannot be written.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import ParameterError
from .experiment import ConfigError, emit_csv, emit_json, load_config, rows_to_csv, run_experiment
from .simulate import simulate_brown_resnick, simulate_smith, write_batch_csv

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxsens", description="Sensitivities of max-stable field performances.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "dump raw simulated draws"),
        ("lrm", "likelihood-ratio estimates"),
        ("ipa", "pathwise estimates (Smith)"),
        ("oracle", "exact values"),
        ("experiment", "run the configured method"),
        ("validate", "validate the configuration"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (output is unchanged)")
        sp.add_argument("--out", default=None, help="output path (.json for JSON, CSV otherwise)")
    return p


def _write(rows, out) -> None:
    if out is None:
        sys.stdout.write(rows_to_csv(rows))
    elif str(out).endswith(".json"):
        emit_json(rows, out)
    else:
        emit_csv(rows, out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    method = {"lrm": "lrm", "ipa": "ipa", "oracle": "oracle"}.get(args.command)
    try:
        cfg = load_config(args.config, seed=args.seed, method=method)
        if args.threads < 1:
            raise ConfigError("--threads: must be positive")
        out = args.out or cfg.output
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.model}, {cfg.method})")
            return EXIT_OK
        if args.command == "simulate":
            sim = simulate_brown_resnick if cfg.model == "brown_resnick" else simulate_smith
            batch = sim(cfg.dependence, cfg.sites, cfg.sim_config(), workers=args.threads)
            if out is None:
                raise ConfigError("--out: simulate needs an output path")
            write_batch_csv(batch, out)
            return EXIT_OK
        rows = run_experiment(cfg, workers=args.threads)
        _write(rows, out)
        return EXIT_OK
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
