"""Command-line front end.

Subcommands:
  amp     evaluate the amplification factor (with word-oracle cross-check);
          --sweep turns the three positional arguments into start:stop:step
          grid specs and emits CSV rows
  sweep   grid sweep straight to CSV (same grammar as amp --sweep)
  verify  replay a scenario file or a builtin construction and check every
          stated expectation
  bound   run the target-risk coverage experiment on a scenario carrying a
          source distribution and a hypothesis class
  arith   the one-digit-by-two-digit multiplication walkthrough and its
          900-expression recoverability sweep

Exit codes: 0 success, 1 verification/coverage failure, 2 usage or parse
error.  COT_LAB_SEED overrides the default seed of seeded subcommands.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import arithmetic
from .adaptation import bound_experiment, tiny_adaptation_instance
from .amplification import (WORD_ORACLE_MAX_K, amplification_closed_form,
                            amplification_max_form, AmplificationParams, breakpoints,
                            tmr_bound, word_oracle)
from .constructions import (Scenario, nfl_instance, omr_instance, tight_instance,
                            verify_scenario)
from .errors import CotLabError, FormatError, ParameterError, RegimeError
from .scenario_io import load_scenario

CSV_COLUMNS = ("K", "phi", "delta", "alpha", "regime", "bound")


def _default_seed() -> int:
    return int(os.environ.get("COT_LAB_SEED", "0"))


def _parse_grid(spec: str, integer: bool = False) -> list[float]:
    """A value or an inclusive start:stop:step range."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [int(spec)] if integer else [float(spec)]
    if len(parts) != 3:
        raise ParameterError(f"grid spec must be value or start:stop:step, got {spec!r}")
    start, stop, step_size = (float(p) for p in parts)
    if step_size <= 0:
        raise ParameterError(f"grid step must be positive in {spec!r}")
    values: list[float] = []
    v = start
    while v <= stop + 1e-9:
        values.append(round(v, 12))
        v += step_size
    return [int(round(v)) for v in values] if integer else values


def _amp_line(k: int, phi: float, delta: float, lam: float, dfg: float) -> dict:
    alpha, regime = amplification_closed_form(k, phi, delta)
    bound = tmr_bound(AmplificationParams(k, phi, delta, lam, dfg))
    return {"K": k, "phi": phi, "delta": delta, "alpha": alpha,
            "regime": regime, "bound": bound}


def _cmd_amp(args: argparse.Namespace) -> int:
    lam, dfg = args.lam, args.dfg
    if args.sweep or ":" in args.K + args.phi + args.delta:
        rows = [_amp_line(k, phi, delta, lam, dfg)
                for k in _parse_grid(args.K, integer=True)
                for phi in _parse_grid(args.phi)
                for delta in _parse_grid(args.delta)]
        if args.csv:
            with open(args.csv, "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(CSV_COLUMNS)
                for row in rows:
                    writer.writerow([row[c] for c in CSV_COLUMNS])
            print(f"wrote {len(rows)} rows to {args.csv}")
        else:
            print(",".join(CSV_COLUMNS))
            for row in rows:
                print(",".join(str(row[c]) for c in CSV_COLUMNS))
        return 0

    k = int(args.K)
    phi, delta = float(args.phi), float(args.delta)
    alpha, regime = amplification_closed_form(k, phi, delta)
    print(f"alpha_{k}({phi:g}, {delta:g}) = {alpha!r}")
    print(f"regime = {regime}")
    if phi < 1.0 < delta:
        bp = breakpoints(k, phi, delta)
        if bp.m_k is not None:
            print(f"m_K = {bp.m_k}")
        if bp.n_k is not None:
            print(f"n_K = {bp.n_k}")
    max_value, argmax_m = amplification_max_form(k, phi, delta)
    print(f"max form: value {max_value!r} at m = {argmax_m}")
    if k <= WORD_ORACLE_MAX_K:
        trace = word_oracle(k, phi, delta)
        gap = abs(trace.value - delta * alpha)
        print(f"word oracle: word {''.join(trace.word) or '(empty)'}, "
              f"value {trace.value!r} = delta * alpha (gap {gap:.3e})")
    bound = tmr_bound(AmplificationParams(k, phi, delta, lam, dfg))
    print(f"mismatch bound (lam={lam:g}, d={dfg:g}): {bound!r}")
    return 0


def _builtin_scenario(args: argparse.Namespace) -> Scenario:
    name = args.builtin
    if name in ("nfl1", "nfl2", "nfl3"):
        return nfl_instance(int(name[-1]), args.K, args.M, args.eps)
    if name == "tight":
        return tight_instance(args.K, args.lam, args.phi, args.delta)
    if name == "omr":
        return omr_instance(args.K, args.M, args.grid_size)
    if name == "tiny":
        return tiny_adaptation_instance()
    raise ParameterError(f"unknown builtin {name!r}")


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.builtin == "arith":
        report = arithmetic.family_recoverability_report()
        print(f"recoverable: {report.recovered}/{report.total}")
        for text in report.failures[:10]:
            print(f"  FAIL {text}")
        if args.json:
            Path(args.json).write_text(json.dumps({
                "total": report.total, "recovered": report.recovered,
                "failures": list(report.failures)}, indent=2) + "\n")
        return 0 if report.all_recovered else 1

    if args.builtin:
        scenario = _builtin_scenario(args)
    elif args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        raise ParameterError("verify needs a scenario file or --builtin")
    report = verify_scenario(scenario, stability_pairs=args.pairs, seed=args.seed)
    for item in report.items:
        print(f"[{'PASS' if item.passed else 'FAIL'}] {item.name}: {item.detail}")
    print(f"scenario {report.scenario}: {'PASS' if report.passed else 'FAIL'}")
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return 0 if report.passed else 1


def _cmd_bound(args: argparse.Namespace) -> int:
    if args.builtin == "tiny" or (args.builtin is None and args.scenario is None):
        scenario = tiny_adaptation_instance()
    elif args.builtin:
        raise ParameterError(f"bound supports --builtin tiny, got {args.builtin!r}")
    else:
        scenario = load_scenario(args.scenario)
    report = bound_experiment(scenario, m=args.m, trials=args.trials, eps=args.eps,
                              seed=args.seed, mode=args.mode, n_draws=args.draws)
    text = json.dumps(report.to_dict(), indent=2)
    print(text)
    if args.json:
        Path(args.json).write_text(text + "\n")
    return 0 if report.frequency <= args.eps else 1


def _cmd_arith(args: argparse.Namespace) -> int:
    rule = arithmetic.build_multiplication_chain_rule()
    prompt = arithmetic.Point.expr("7·26")
    traj = arithmetic.run_trajectory(rule, arithmetic.GROUND_TRUTH, prompt)
    print(f"prompt: {prompt.value}")
    for k, (q, a) in enumerate(zip(traj.questions, traj.answers), start=1):
        print(f"  Q{k} = {q.value:<8} A{k} = {a.value}")
    report = arithmetic.family_recoverability_report(rule)
    print(f"recoverable: {report.recovered}/{report.total}")
    if args.csv:
        with open(args.csv, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(("x", "Q1", "Q2", "Q3", "Q4", "A1", "A2", "A3", "A4", "direct"))
            for row in arithmetic.trajectory_rows(rule):
                writer.writerow(row)
        print(f"wrote trajectories to {args.csv}")
    return 0 if report.all_recovered else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cot-lab",
        description="Chain-of-thought reasoning-risk verification lab.")
    sub = parser.add_subparsers(dest="command", required=True)

    amp = sub.add_parser("amp", help="evaluate the amplification factor")
    amp.add_argument("K", help="number of steps (or start:stop:step with --sweep)")
    amp.add_argument("phi", help="hypothesis stability constant (or grid spec)")
    amp.add_argument("delta", help="per-step stability constant (or grid spec)")
    amp.add_argument("--sweep", action="store_true",
                     help="treat K/phi/delta as start:stop:step grid specs")
    amp.add_argument("--csv", help="write sweep rows to this CSV file "
                                   f"(columns {','.join(CSV_COLUMNS)})")
    amp.add_argument("--lam", type=float, default=2.0,
                     help="loss stability constant for the bound column (default 2)")
    amp.add_argument("--dfg", type=float, default=1.0,
                     help="sup distance between hypothesis and truth (default 1)")
    amp.set_defaults(func=_cmd_amp)

    sweep = sub.add_parser("sweep", help="amplification grid sweep to CSV")
    sweep.add_argument("K")
    sweep.add_argument("phi")
    sweep.add_argument("delta")
    sweep.add_argument("--csv", required=True)
    sweep.add_argument("--lam", type=float, default=2.0)
    sweep.add_argument("--dfg", type=float, default=1.0)
    sweep.set_defaults(func=_cmd_amp, sweep=True)

    verify = sub.add_parser("verify", help="verify a scenario file or builtin")
    verify.add_argument("scenario", nargs="?", help="scenario JSON file")
    verify.add_argument("--builtin",
                        choices=("nfl1", "nfl2", "nfl3", "tight", "omr", "arith", "tiny"))
    verify.add_argument("--K", type=int, default=2)
    verify.add_argument("--M", type=float, default=1.0)
    verify.add_argument("--eps", type=float, default=0.1)
    verify.add_argument("--lam", type=float, default=2.0)
    verify.add_argument("--phi", type=float, default=1.0)
    verify.add_argument("--delta", type=float, default=1.0)
    verify.add_argument("--grid-size", type=int, default=10)
    verify.add_argument("--pairs", type=int, default=10_000,
                        help="pairs per sampled stability check")
    verify.add_argument("--seed", type=int, default=_default_seed())
    verify.add_argument("--json", help="write the report to this JSON file")
    verify.set_defaults(func=_cmd_verify)

    bound = sub.add_parser("bound", help="coverage experiment for the target-risk bound")
    bound.add_argument("scenario", nargs="?", help="scenario JSON with mu and hypotheses")
    bound.add_argument("--builtin", choices=("tiny",))
    bound.add_argument("--m", type=int, default=8, help="per-trial sample size")
    bound.add_argument("--trials", type=int, default=2000)
    bound.add_argument("--eps", type=float, default=0.1)
    bound.add_argument("--seed", type=int, default=_default_seed())
    bound.add_argument("--mode", choices=("exhaustive", "monte_carlo"), default="exhaustive")
    bound.add_argument("--draws", type=int, default=None,
                       help="sign draws for monte_carlo mode")
    bound.add_argument("--json", help="write the coverage report to this JSON file")
    bound.set_defaults(func=_cmd_bound)

    arith = sub.add_parser("arith", help="multiplication chain-rule walkthrough")
    arith.add_argument("--csv", help="write all 900 trajectories to this CSV file")
    arith.set_defaults(func=_cmd_arith)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:  # argparse uses 2 for usage errors already
        return int(err.code or 0)
    try:
        return args.func(args)
    except (ParameterError, FormatError, RegimeError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except CotLabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
