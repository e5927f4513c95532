"""Threshold Market entrypoint.

Commands:

- ``simulate``: run the full experiment (replicas, price series, loss
  analysis, fits) and write the result bundle.
- ``analyze``: re-run the loss analysis on stored ``daily.csv`` files.
- ``fit``: fit the q-exponential to raw interoccurrence times (column ``r``).
- ``config-check``: validate a configuration, print its warnings and
  optionally write a complete INI file (``--write``).

Exit codes: 0 on success, 2 for configuration errors, 3 for insufficient
events and 1 for any other failure.
"""

from __future__ import annotations

import sys
from argparse import ArgumentParser, Namespace, RawDescriptionHelpFormatter
from typing import Dict, List, Optional

from .errors import ConfigError, MarketError
from .log import log_error

_FLAG_KEYS = {
    "lam": "model.lambda",
    "tau": "market.tau",
    "seed": "run.seed",
    "replicas": "run.replicas",
    "workers": "run.workers",
    "days": "run.total_days",
    "out": "output.dir",
}


def _add_config_flags(parser: ArgumentParser):
    parser.add_argument("--config", help="INI config file or a run's manifest.json")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a dotted config key, e.g. --set noise.K=5 (repeatable)",
    )
    parser.add_argument("--lambda", dest="lam", help="Threshold amplitude (model.lambda)")
    parser.add_argument("--tau", help="Trading-day length in rounds (market.tau)")
    parser.add_argument("--seed", help="Root random seed (run.seed)")
    parser.add_argument("--replicas", help="Number of independent lattices (run.replicas)")
    parser.add_argument("--workers", help="Worker processes for replicas (run.workers)")
    parser.add_argument("--days", help="Simulated trading days (run.total_days)")
    parser.add_argument("--out", help="Output directory (output.dir)")


def _build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="threshold-market",
        description="Threshold social-impact market simulator and interoccurrence analysis.",
        formatter_class=RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run the full experiment")
    _add_config_flags(simulate)

    analyze = commands.add_parser("analyze", help="Re-analyze stored daily returns")
    analyze.add_argument("daily", nargs="+", help="daily.csv file(s), one per replica")
    _add_config_flags(analyze)

    fit = commands.add_parser("fit", help="Fit the q-exponential to interoccurrence times")
    fit.add_argument("csv", help="CSV file with a column 'r' of interoccurrence times")
    fit.add_argument("--q0", type=float, default=None, help="Directional coefficient")

    check = commands.add_parser("config-check", help="Validate a configuration")
    _add_config_flags(check)
    check.add_argument(
        "--write",
        metavar="PATH",
        help="Create or update an INI file with every option (user values kept)",
    )
    return parser


def _overrides(args: Namespace) -> Dict[str, str]:
    """Collect ``--set`` pairs and dedicated flags into dotted overrides."""
    overrides: Dict[str, str] = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        overrides[key.strip()] = value.strip()
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _load(args: Namespace):
    from .config import load_config  # pylint: disable=import-outside-toplevel

    return load_config(args.config, _overrides(args))


def _simulate(args: Namespace) -> int:
    from .experiment import run_experiment  # pylint: disable=import-outside-toplevel

    bundle = run_experiment(_load(args))
    print(f"Wrote {len(bundle.files)} files to {bundle.output_dir}")
    for item in bundle.results:
        if item.fit is not None:
            print(
                f"R_Q={item.target_rq:g}: q={item.fit.q:.4f} "
                f"beta={item.fit.beta_scale:.4f} events={item.analysis.n_events}"
            )
        else:
            print(f"R_Q={item.target_rq:g}: no fit ({item.error})")
    return 0


def _analyze(args: Namespace) -> int:
    # pylint: disable=import-outside-toplevel
    from .experiment import analyze_stored
    from .output import read_daily_returns

    config = _load(args)
    bundle = analyze_stored(config, [read_daily_returns(path) for path in args.daily])
    print(f"Wrote {len(bundle.files)} files to {bundle.output_dir}")
    return 0


def _fit(args: Namespace) -> int:
    # pylint: disable=import-outside-toplevel
    from .analysis.fitting import fit_inter_times
    from .const import DEFAULT_Q0
    from .output import read_inter_times

    q0 = DEFAULT_Q0 if args.q0 is None else args.q0
    fit = fit_inter_times(read_inter_times(args.csv), q0)
    print(
        f"q={fit.q:.6f} beta={fit.beta_scale:.6f} "
        f"rms_log_residual={fit.rms_log_residual:.4f} "
        f"bins={fit.n_bins} samples={fit.n_samples}"
    )
    return 0


def _config_check(args: Namespace) -> int:
    # pylint: disable=import-outside-toplevel
    from .config import config_warnings, ensure_config_exists

    config = _load(args)
    if args.write:
        ensure_config_exists(args.write)
        print(f"Config file up to date: {args.write}")
    for warning in config_warnings(config):
        print(f"warning: {warning}")
    print("Configuration OK")
    return 0


_COMMANDS = {
    "simulate": _simulate,
    "analyze": _analyze,
    "fit": _fit,
    "config-check": _config_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entrypoint.

    Parses the command line, runs the requested command and maps expected
    failures to their exit codes.
    """
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MarketError as err:
        log_error(str(err))
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except (OSError, ValueError) as err:
        log_error(f"Unhandled entrypoint error occurred: {err}")
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
