"""Command line entry point: ``xpbell run | calibrate | validate | scan``.

Exit codes: 0 success, 1 invalid configuration, 2 calibration refusal,
3 validation-suite failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .baselines import LhvModel, angle_grid, scan_settings, singlet_exact_s
from .experiment import ConfigError, ExperimentConfig, dumps, run_calibration, run_experiment
from .rng import Stream
from .sampling import CalibrationError
from .validation import SUITES, run_validation

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CALIBRATION = 2
EXIT_VALIDATION = 3

log = logging.getLogger("xpbell")


def load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        cfg = ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "override_calibration", False):
        updates["override_calibration"] = True
    if getattr(args, "flip", False):
        updates["flip"] = True
    if updates:
        cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def _emit(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = load_config(args)
    if args.dump_config:
        _emit(cfg.to_json(), args.output)
        return EXIT_OK
    try:
        report = run_experiment(cfg, workers=args.workers)
    except CalibrationError as exc:
        log.error("%s", exc)
        sys.stdout.write(dumps({"error": "calibration", "message": str(exc),
                                "calibration": [r.to_dict() for r in exc.reports]}))
        return EXIT_CALIBRATION
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.output)
    t = report.timings()
    log.info("S = %.6f +- %.6f, %.3g readings/s (%s)", report.chsh.s_value, report.chsh.stderr,
             t["readings_per_s"], t["backend"])
    if args.timings:
        Path(args.timings).write_text(dumps(t))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = load_config(args)
    reports = run_calibration(cfg)
    _emit(dumps({"calibration": [r.to_dict() for r in reports]}), args.output)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CALIBRATION


def cmd_validate(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    results = [run_validation(s, seed=args.seed or 0, quick=args.quick) for s in suites]
    for r in results:
        log.info("%s: %s", r["suite"], "pass" if r["passed"] else "FAIL")
    _emit(dumps({"passed": all(r["passed"] for r in results), "suites": results}), args.output)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_VALIDATION


def cmd_scan(args) -> int:
    family = "singlet" if args.family == "singlet" else LhvModel()
    grid = angle_grid(args.steps)
    rows, best = scan_settings(family, grid, Stream.from_seed(args.seed or 0, 14), args.trials)
    if args.family == "singlet":
        for r in rows:
            r["S_exact"] = singlet_exact_s(r["settings"])
    _emit(dumps({"family": args.family, "grid_steps": args.steps, "trials_per_pair": args.trials,
                 "rows": rows, "best": rows[best]}), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xpbell", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("-o", "--output", help="write output here instead of stdout")

    p = sub.add_parser("run", help="run the full simulated experiment")
    common(p)
    p.add_argument("-c", "--config", help="ExperimentConfig JSON")
    p.add_argument("-j", "--workers", type=int, default=1)
    p.add_argument("--trials", type=int, default=None, help="windows per setting pair")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--override-calibration", action="store_true")
    p.add_argument("--flip", action="store_true", help="swap the sharp/fuzzy sign convention")
    p.add_argument("--timings", help="write wall-clock and throughput metrics to this JSON file")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="partner-off detector calibration")
    common(p)
    p.add_argument("-c", "--config")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate", help="baseline validation suites")
    common(p)
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--quick", action="store_true", help="reduced sample sizes")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scan", help="CHSH value over a grid of analyzer settings")
    common(p)
    p.add_argument("--family", choices=("singlet", "lhv"), default="singlet")
    p.add_argument("--steps", type=int, default=4, help="angles per axis (grid has steps^4 points)")
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        sys.stdout.write(dumps({"error": "config", "field": exc.field, "message": str(exc)}))
        return EXIT_CONFIG
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
