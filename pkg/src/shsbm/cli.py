"""Command-line entry point: ``shsbm <subcommand> [flags]``.

Exit status is 0 on success, 1 when the computation fails (invalid config,
enumeration guard, failed verification) and 2 on a usage error. Results go to
stdout as JSON unless ``--out`` is given; logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ShsbmError
from .model import Hypothesis, ModelConfig, sample_weights, uniform_hypothesis
from .serialization import SCHEMA_VERSION, dumps, hypothesis_from_json, read_json, tensor_from_json, tensor_to_json
from .thresholds import MODES, PRESETS, ThresholdParams, classify, preset_thresholds

log = logging.getLogger("shsbm")


class VerificationFailed(ShsbmError):
    pass


def default_jobs() -> int:
    env = os.environ.get("SHSBM_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer SHSBM_JOBS=%r", env)
    return os.cpu_count() or 1


def _emit(doc: dict, out: str | None) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str) -> ModelConfig:
    doc = read_json(path)
    if isinstance(doc, dict) and "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return ModelConfig.from_dict(doc)


def cmd_sample(args) -> int:
    config = _load_config(args.config)
    if args.truth:
        truth = hypothesis_from_json(read_json(args.truth), config.r, config.k)
        truth.check_config(config)
    else:
        truth = uniform_hypothesis(config.n, config.r, config.k, np.random.default_rng([args.seed, 0]))
    weights = sample_weights(config, truth, seed=args.seed)
    _emit(tensor_to_json(weights, seed=args.seed, truth=truth), args.out)
    return 0


def cmd_recover(args) -> int:
    from .mle import recovery_success, solve

    doc = read_json(args.weights)
    weights = tensor_from_json(doc)
    sense = "minimize" if args.minimize else "maximize"
    result = solve(weights, args.r, args.k, sense=sense, jobs=args.jobs)
    out = {"schema_version": SCHEMA_VERSION, **result.to_dict()}
    truth_doc = read_json(args.truth) if args.truth else (doc if "truth" in doc else None)
    if truth_doc is not None:
        truth = hypothesis_from_json(truth_doc, args.r, args.k)
        out["success"] = recovery_success(result, truth)
    _emit(out, args.out)
    return 0


def cmd_threshold(args) -> int:
    config = _load_config(args.config)
    params = ThresholdParams(c0=args.c0, C_upper=args.constant, denominator_mode=args.mode)
    report = preset_thresholds(args.preset, config, params) if args.preset else classify(config, params)
    _emit({"schema_version": SCHEMA_VERSION, **report.to_dict()}, args.out)
    return 0


def cmd_mi(args) -> int:
    from .oracles import exact_mi

    config = _load_config(args.config)
    _emit({"schema_version": SCHEMA_VERSION, "config": config.to_dict(), **exact_mi(config).to_dict()}, args.out)
    return 0


def cmd_batch(args) -> int:
    from .experiments import run_batch

    config = _load_config(args.config)
    truth = None
    if args.fixed_truth:
        truth = hypothesis_from_json(read_json(args.fixed_truth), config.r, config.k)
    batch = run_batch(config, args.trials, args.seed, args.jobs, truth)
    _emit(batch.to_dict(include_trials=args.per_trial), args.out)
    return 0


def cmd_fano(args) -> int:
    from .experiments import fano_experiment

    result = fano_experiment(_load_config(args.config), args.trials, args.seed, args.jobs)
    _emit(result.to_dict(), args.out)
    return 0 if result.passed else 1


def cmd_sweep(args) -> int:
    from .experiments import load_grid, sweep, sweep_svg

    grid = load_grid(read_json(args.grid))
    params = ThresholdParams(c0=args.c0, C_upper=args.constant, denominator_mode=args.mode)
    result = sweep(grid, args.trials, args.seed, args.jobs, params)
    doc = result.to_dict()
    if args.out:
        prefix = Path(args.out)
        prefix.with_suffix(".csv").write_text(result.to_csv())
        prefix.with_suffix(".json").write_text(dumps(doc))
        if len(result.axes) == 2:
            prefix.with_suffix(".svg").write_text(sweep_svg(result, params))
    else:
        sys.stdout.write(dumps(doc))
    return 0


def cmd_verify(args) -> int:
    from .oracles import run_suite

    reports = run_suite(args.suite, max_n=args.max_n, seed=args.seed, samples=args.samples)
    ok = all(r.passed for r in reports)
    for r in reports:
        log.info("%-22s %s  checked=%d max_violation=%s", r.lemma_id, "PASS" if r.passed else "FAIL",
                 r.instances_checked, r.max_violation)
    _emit({"schema_version": SCHEMA_VERSION, "passed": ok, "reports": [r.to_dict() for r in reports]}, args.out)
    return 0 if ok else 1


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    from .oracles import SUITES

    parser = argparse.ArgumentParser(prog="shsbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False, jobs=False):
        p.add_argument("--out", help="write the JSON result here instead of stdout")
        if seed:
            p.add_argument("--seed", type=_seed, default=0)
        if jobs:
            p.add_argument("--jobs", type=_positive_int, default=default_jobs(),
                           help="worker processes (default: $SHSBM_JOBS or the core count)")

    def threshold_flags(p):
        p.add_argument("--c0", type=float, default=0.5)
        p.add_argument("--constant", type=float, default=1.0, help="constant on the achievability side")
        p.add_argument("--mode", choices=MODES, default=None)

    p = sub.add_parser("sample", help="draw a weight tensor")
    p.add_argument("--config", required=True)
    p.add_argument("--truth", help="planted labels (default: uniform draw from the seed)")
    common(p, seed=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("recover", help="exact MLE over all tensor classes")
    p.add_argument("--weights", required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--truth", help="labels to score success against (default: the weight file's truth)")
    p.add_argument("--minimize", action="store_true", help="search for the minimum (q > p)")
    common(p, jobs=True)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("threshold", help="threshold report for one config")
    p.add_argument("--config", required=True)
    p.add_argument("--preset", choices=PRESETS)
    threshold_flags(p)
    common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("mi", help="exact mutual information by enumeration")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("batch", help="Monte Carlo success rate at one config")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--fixed-truth", help="plant these labels in every trial")
    p.add_argument("--per-trial", action="store_true", help="include per-trial outcomes")
    common(p, seed=True, jobs=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("fano", help="empirical error against the Fano floor (r = 1)")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=_positive_int, default=500)
    common(p, seed=True, jobs=True)
    p.set_defaults(func=cmd_fano)

    p = sub.add_parser("sweep", help="success rates over a grid of configs")
    p.add_argument("--grid", required=True)
    p.add_argument("--trials", type=_positive_int, default=100)
    threshold_flags(p)
    p.add_argument("--out", help="output prefix; writes .csv, .json and (two-axis grids) .svg")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--jobs", type=_positive_int, default=default_jobs())
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the exhaustive and Monte Carlo checks")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.add_argument("--max-n", type=_positive_int, default=8)
    p.add_argument("--samples", type=_positive_int, default=100_000, help="Monte Carlo samples per tail instance")
    common(p, seed=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ShsbmError, ValueError, OSError) as exc:
        log.error("%s", exc)
        sys.stdout.write(dumps({"schema_version": SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
