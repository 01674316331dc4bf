"""Command-line front end.

Subcommands: simulate | enumerate | calibrate.  Configuration is a JSON
document; goal, deviation, and blame ids are closed enumerations validated up
front.  All randomness flows from the seed (config field or --seed override);
there is no wall-clock seeding.  Machine-readable outputs go to files under
--out, diagnostics to stderr.

Exit codes: 0 success, 1 verification assertion failure, 2 config error,
3 resource error (enumeration budget, calibration sample too small).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import _kernels, montecarlo
from .core import InvalidInputError
from .deviations import apply_deviations
from .exact_oracle import BudgetExceededError, verify_blame_bounds
from .montecarlo import (
    CSV_HEADERS,
    CalibrationError,
    ConfigError,
    ExperimentConfig,
    build_goal,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _default_threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.threads
    env = os.environ.get("DEVLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"DEVLAB_THREADS is not an integer: {env!r}") from None
        if value < 1:
            raise ConfigError("DEVLAB_THREADS must be >= 1")
        return value
    return 1


def _apply_overrides(raw: dict, args) -> dict:
    out = dict(raw)
    if args.seed is not None:
        out["seed"] = args.seed
    if args.trials is not None:
        out["trials"] = args.trials
    if args.horizon is not None:
        out["horizon"] = args.horizon
    return out


def _out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_simulate(args) -> int:
    raw = _load_config(args.config)
    threads = _default_threads(args)
    experiments = raw.get("experiments", [raw]) if isinstance(raw, dict) else None
    if not isinstance(experiments, list) or not experiments:
        raise ConfigError("config must be an experiment object or {'experiments': [...]}")
    configs = [ExperimentConfig.from_dict(_apply_overrides(e, args)) for e in experiments]

    out = _out_dir(args)
    jsonl_path = out / "reports.jsonl"
    csv_path = out / "summary.csv"
    _log(f"devlab simulate: {len(configs)} experiment(s), backend={_kernels.BACKEND}, threads={threads}")
    with open(jsonl_path, "w", encoding="utf-8", newline="\n") as jsonl, open(
        csv_path, "w", encoding="utf-8", newline=""
    ) as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=CSV_HEADERS, lineterminator="\n")
        writer.writeheader()
        for k, config in enumerate(configs, 1):
            report = montecarlo.run_experiment(config, threads=threads)
            jsonl.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
            for row in report.csv_rows():
                writer.writerow(row)
            _log(
                f"  [{k}/{len(configs)}] {config.label or config.goal_id}: "
                f"{config.trials} trials in {report.runtime_seconds:.2f}s"
            )
    _log(f"wrote {jsonl_path} and {csv_path}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    raw = _apply_overrides(_load_config(args.config), args)
    goal_raw = raw.get("goal")
    if not isinstance(goal_raw, dict) or "id" not in goal_raw:
        raise ConfigError("config missing field 'goal.id'")
    horizon = raw.get("horizon")
    if not isinstance(horizon, int) or horizon < 1:
        raise ConfigError("field 'horizon' must be an integer >= 1")
    goal = build_goal(goal_raw["id"], {k: v for k, v in goal_raw.items() if k != "id"})
    hyp_specs = [montecarlo.deviation_from_dict(d) for d in raw.get("hypothesis", [])]
    hypothesis = apply_deviations(goal, hyp_specs)
    tolerance = raw.get("tolerance", 1e-10)

    t0 = time.perf_counter()
    report = verify_blame_bounds(goal, hypothesis, horizon, tolerance=tolerance)
    out = _out_dir(args)
    path = out / "verify_report.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _log(
        f"devlab enumerate: {report.num_rejecting} rejecting prefixes, "
        f"eps_n={report.eps_n:.6g}, {len(report.checks)} checks, "
        f"{time.perf_counter() - t0:.2f}s -> {path}"
    )
    if not report.passed:
        for check in report.failures:
            _log(f"  FAILED {check.name}: lhs={check.lhs!r} rhs={check.rhs!r} ({check.detail})")
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_calibrate(args) -> int:
    raw = _apply_overrides(_load_config(args.config), args)
    goal_raw = raw.get("goal", {})
    if goal_raw.get("id", "random_walk") != "random_walk":
        raise ConfigError("calibrate applies to the random_walk goal (field 'goal.id')")
    for name in ("horizon", "trials", "seed", "alpha"):
        if name not in raw:
            raise ConfigError(f"config missing field '{name}'")
    alpha = raw["alpha"]
    if not isinstance(alpha, (int, float)) or not 0.0 < alpha <= 0.5:
        raise ConfigError("field 'alpha' must be in (0, 0.5]")
    threads = _default_threads(args)
    result = montecarlo.calibrate_thresholds(
        start=int(goal_raw.get("start", 10)),
        horizon=int(raw["horizon"]),
        alpha=float(alpha),
        trials=int(raw["trials"]),
        seed=int(raw["seed"]),
        n0=int(raw.get("n0", 100)),
        threads=threads,
    )
    out = _out_dir(args)
    path = out / "thresholds.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _log(
        f"devlab calibrate: {result.conditioned_episodes} conditioned episodes "
        f"of {result.trials} trials -> {path}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devlab",
        description="Deviation-detection experiments: simulate, enumerate, calibrate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
        ("simulate", cmd_simulate, "run Monte Carlo experiments from a config file"),
        ("enumerate", cmd_enumerate, "exact small-instance verification of the blame bounds"),
        ("calibrate", cmd_calibrate, "calibrate random-walk surrogate thresholds"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--trials", type=int, default=None, help="override config trials")
        p.add_argument("--horizon", type=int, default=None, help="override config horizon")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (default: DEVLAB_THREADS or 1)",
        )
        p.add_argument("--out", default="devlab-out", help="output directory")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InvalidInputError) as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        _log(f"resource error: {exc}")
        return EXIT_RESOURCE
    except CalibrationError as exc:
        _log(f"resource error: {exc}")
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
