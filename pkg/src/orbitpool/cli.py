"""Command line entry point.

    orbitpool run <config.json> [--out DIR] [--seed N] [--quiet]
    orbitpool validate <config.json>

Exit status: 0 when every bound check passes, 2 when a check fails beyond
its tolerance (the offending report paths are printed), 1 on configuration
or runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import ConfigError, check_semantics, load_config
from .errors import DegenerateBasisError, DegenerateInputError, OrbitPoolError
from .runner import run_experiment, thread_count

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitpool", description="Group-orbit pooling verification experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("config", help="path to the JSON configuration")
    run.add_argument("--out", help="output directory (default: config output_dir, else ./orbitpool-out/<name>)")
    run.add_argument("--seed", type=int, help="override the configuration seed")
    run.add_argument("--quiet", action="store_true", help="suppress progress output")

    val = sub.add_parser("validate", help="check a configuration without running it")
    val.add_argument("config", help="path to the JSON configuration")
    return parser


def _error(msg: str) -> int:
    print(f"orbitpool: error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _validate(args) -> int:
    try:
        cfg = load_config(args.config)
        check_semantics(cfg)
    except DegenerateInputError as exc:
        return _error(f"degenerate input: {exc}")
    except (ConfigError, OrbitPoolError) as exc:
        return _error(str(exc))
    print(f"{args.config}: valid {cfg.experiment} configuration")
    return EXIT_OK


def _run(args) -> int:
    if args.seed is not None and args.seed < 0:
        return _error("--seed must be non-negative")
    try:
        cfg = load_config(args.config, seed=args.seed)
        check_semantics(cfg)
        out = args.out or cfg.output_dir or os.path.join("orbitpool-out", cfg.name)
        threads = thread_count()
        result = run_experiment(cfg, out, threads=threads, quiet=args.quiet)
    except ConfigError as exc:
        return _error(str(exc))
    except DegenerateInputError as exc:
        return _error(f"degenerate input: {exc}")
    except DegenerateBasisError as exc:
        return _error(f"degenerate basis: {exc}")
    except (OrbitPoolError, ValueError) as exc:
        return _error(str(exc))
    except OSError as exc:
        return _error(f"cannot write outputs: {exc}")
    failures = result.failures
    if failures:
        for path in failures:
            print(f"orbitpool: bound violated: {path}", file=sys.stderr)
        return EXIT_VIOLATION
    if not args.quiet:
        print(f"all checks passed; artifacts in {out}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _validate(args)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
