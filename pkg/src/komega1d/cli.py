"""Command-line front end.

Five subcommands: ``run`` and ``sweep`` execute a configuration file,
``check-oracles`` exercises the closed-form layer against independent
integrations, ``schema`` prints the artifact layouts, and ``version``
prints the artifact version.  Exit codes: 0 on success (a detected
blow-up is a successful run), 1 when a run degenerates or an oracle check
fails, 2 for configuration and usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from ._version import __version__
from .config import ConfigError, load_config
from .diagnostics import ROW_FIELDS, STABILITY_FIELDS, TOY_ROW_FIELDS
from .scenarios import oracle_checks, run_scenario, run_sweep
from .stepping import SCHEME_FAILURE

__all__ = ["main", "build_parser"]

_RUN_SUMMARY_KEYS = (
    "artifact_version", "scenario", "status", "reason", "t_end", "steps",
    "terminal", "lifespan_lower_bound", "ended_before_lifespan_bound",
    "cont_integral", "omega_l3_cubed_max", "envelope_violation_max",
    "odd_even_drift_max", "mean_u_drift_max", "k_zero_node_max", "config",
)
_SWEEP_SUMMARY_KEYS = (
    "artifact_version", "scenario", "sweep_parameter", "sweep_values",
    "members", "cross_member", "config",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="komega1d",
        description="Numerical laboratory for a one-dimensional two-equation "
        "turbulence model on the periodic torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, workers=False):
        p.add_argument("config", help="path to a 'key = value' configuration file")
        p.add_argument("--output-dir", default=None, help="directory for run artifacts")
        if workers:
            p.add_argument(
                "--workers", type=int, default=1, help="concurrent sweep members (default 1)"
            )
        p.add_argument(
            "--seed", type=int, default=None,
            help="reserved for future stochastic features; every current "
            "computation is deterministic",
        )
        p.add_argument("--quiet", action="store_true", help="suppress progress lines")

    add_common(sub.add_parser("run", help="execute a single-run configuration"))
    add_common(sub.add_parser("sweep", help="execute a sweep configuration"), workers=True)
    sub.add_parser("check-oracles", help="self-check the closed-form reference layer")
    sub.add_parser("schema", help="print artifact schemas as JSON")
    sub.add_parser("version", help="print the artifact version")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_scenario(cfg, output_dir=args.output_dir, quiet=args.quiet)
    if args.output_dir is None and not args.quiet:
        json.dump(summary, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 1 if summary["status"] == SCHEME_FAILURE else 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    summary = run_sweep(
        cfg, output_dir=args.output_dir, workers=args.workers, quiet=args.quiet
    )
    if args.output_dir is None and not args.quiet:
        json.dump(summary, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def _cmd_check_oracles() -> int:
    checks = oracle_checks()
    failures = 0
    for c in checks:
        mark = "ok  " if c["passed"] else "FAIL"
        print(f"[{mark}] {c['name']}: measured {c['measured']:.3e} <= {c['tolerance']:.1e}")
        failures += 0 if c["passed"] else 1
    print(f"{len(checks) - failures}/{len(checks)} oracle checks passed")
    return 0 if failures == 0 else 1


def _cmd_schema() -> int:
    json.dump(
        {
            "diagnostics_csv": list(ROW_FIELDS),
            "toy_diagnostics_csv": list(TOY_ROW_FIELDS),
            "stability_csv": list(STABILITY_FIELDS),
            "envelopes_csv": [
                "t", "omega_min", "omega_max", "envelope_upper", "envelope_lower",
                "k_min", "k_floor", "omega_l3_cubed",
            ],
            "run_summary_json": list(_RUN_SUMMARY_KEYS),
            "sweep_summary_json": list(_SWEEP_SUMMARY_KEYS),
        },
        sys.stdout,
        indent=2,
    )
    sys.stdout.write("\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "check-oracles":
            return _cmd_check_oracles()
        if args.command == "schema":
            return _cmd_schema()
        print(__version__)
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
