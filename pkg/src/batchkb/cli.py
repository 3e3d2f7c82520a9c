"""Command-line entry point: ``batchkb {run,compare,diagnose,schedule,instance}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ExperimentConfig
from .environment import Domain
from .errors import ConfigError, ConstructionError, InputError, NumericalError
from .harness import (compare_schedules, diagnose_batches, format_comparison, resolve_schedule,
                      run_experiment, verify_instance)
from .schedules import OverflowReport, make_schedule

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    res = run_experiment(cfg)
    print(f"schedule sizes: {list(res.schedule.sizes)} (B={res.schedule.B})")
    print(f"{'checkpoint':>10} {'mean':>12} {'stderr':>10} {'n':>4}")
    for row in res.aggregate:
        print(f"{row['checkpoint']:>10} {row['mean']:>12.3f} {row['stderr']:>10.3f} {row['n_trials']:>4}")
    if cfg.output:
        print(f"wrote {cfg.output}/trials.csv and {cfg.output}/aggregate.csv")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    rows = compare_schedules(cfg)
    print(format_comparison(rows))
    if cfg.output:
        print(f"wrote {cfg.output}/compare.csv")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    sched = resolve_schedule(cfg, cfg.schedule)
    ref = cfg.reference or {}
    kernel = ref.get("kernel", cfg.kernel.family)
    d = int(ref.get("d", Domain.from_config(cfg.domain).dim))
    B = int(ref.get("B", max(2, sched.B)))
    nu = ref.get("nu", cfg.kernel.nu)
    report = diagnose_batches(sched, kernel, cfg.T, B, d, nu)
    print(f"realized endpoints : {report['realized_endpoints']}")
    print(f"reference endpoints: {report['reference_endpoints']}")
    for i, flag in enumerate(report["flags"], start=1):
        print(f"  A_{i}: {'bad' if flag else '-'}")
    print(f"bad batches: {report['bad_batches']}")
    return EXIT_OK


def _cmd_schedule(args) -> int:
    spec = {"rule": args.rule}
    if args.a is not None:
        spec["a"] = args.a
    if args.B is not None:
        spec["B"] = args.B
    sched = make_schedule(spec, args.T, args.kernel, args.d, args.nu)
    if isinstance(sched, OverflowReport):
        print(json.dumps({"rule": sched.rule, "T": sched.horizon, "B": sched.B, "overflow": True,
                          "leading_sizes": list(sched.leading_sizes), "last_size": sched.last_size}))
    else:
        print(json.dumps(sched.describe()))
    return EXIT_OK


def _cmd_instance(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    report = verify_instance(cfg)
    print(json.dumps(report))
    ok = all(v for k, v in report.items() if isinstance(v, bool))
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="batchkb", description="Batched kernelized bandit experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
        ("run", _cmd_run, "run one experiment and aggregate regret"),
        ("compare", _cmd_compare, "compare several schedules with paired noise"),
        ("diagnose", _cmd_diagnose, "evaluate bad-batch events against reference endpoints"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("schedule", help="print batch sizes and endpoints")
    sp.add_argument("rule", choices=["growing_li", "growing_param", "fixed_li", "fixed_refined"])
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--a", type=float)
    sp.add_argument("--B", type=int)
    sp.add_argument("--kernel", default="se", choices=["se", "matern"])
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--nu", type=float)
    sp.set_defaults(func=_cmd_schedule)

    sp = sub.add_parser("instance", help="hard-instance utilities")
    isub = sp.add_subparsers(dest="action", required=True)
    vp = isub.add_parser("verify", help="check the hard-family properties")
    vp.add_argument("config")
    vp.set_defaults(func=_cmd_instance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
