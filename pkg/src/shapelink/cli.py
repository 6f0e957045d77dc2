"""Command-line experiment runner.

Four verbs share the same flags:

``run``
    Execute the mode named in the config.
``validate``
    Report config diagnostics without running anything.
``shape`` / ``sweep``
    Shortcuts that force the mode to ``shape`` / ``gap_sweep``.

Exit status: 0 success, 1 config or diagnostic problem, 2 runtime
failure (a manifest describing the failure is still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import ConfigurationError
from .experiments import parse_config, run_experiment, validate_config

_FORCED_MODE = {"shape": "shape", "sweep": "gap_sweep"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapelink",
        description="Constellation shaping and fiber link experiment runner.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("run", "run the experiment mode named in the config"),
        ("validate", "report config diagnostics without running"),
        ("shape", "run constellation shaping (mode forced to shape)"),
        ("sweep", "run the capacity-gap sweep (mode forced to gap_sweep)"),
    ):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True, help="experiment config file (INI)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument(
            "--workers", type=int, default=1, help="worker threads for sweep points"
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg, diags = parse_config(args.config)

    if args.verb == "validate":
        if cfg is not None:
            diags = diags + validate_config(cfg)
        for d in diags:
            print(d)
        return 0 if not diags else 1

    if cfg is None or diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    forced = _FORCED_MODE.get(args.verb)
    if forced is not None:
        cfg = dataclasses.replace(cfg, mode=forced)
    if args.seed is not None and args.seed < 0:
        print("experiment.seed: must be nonnegative", file=sys.stderr)
        return 1

    try:
        report = run_experiment(
            cfg, out_dir=args.out, seed=args.seed, workers=args.workers
        )
    except ConfigurationError as exc:
        for line in str(exc).splitlines():
            print(line, file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: manifest already records it
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    for path in report.outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
