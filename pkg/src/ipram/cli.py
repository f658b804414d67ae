"""``ipram`` command line: plan, perturb, risk, simulate, table1.

Exit codes: 0 success, 2 validation error, 3 infeasible plan, 4 I/O error.
Seeds are always explicit flags; no environment default exists.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as dataio
from .domain import PlanningError, ValidationError
from .matrix import build_ifpr, format_matrix_rounded, verify_invariance, verify_row_stochastic
from .perturb import RNG_NAME, perturb
from .planner import TABLE1_T1, TABLE1_XI, plan_blocks, reproduce_table1
from .risk import risk_profile
from .sim import simulate_replicates, summarize

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _load_inputs(args):
    """Plan plus the column re-indexed onto the plan's labels, after consistency checks."""
    freq, plan = dataio.load_plan(args.plan)
    col, _ = dataio.read_categorical_csv(args.input, args.column)
    col = dataio.align_column(col, freq.labels)
    counts = tuple(int(c) for c in np.bincount(col.values, minlength=col.k))
    if counts != freq.counts:
        raise ValidationError(
            f"counts in {args.input} {counts} differ from the plan's {freq.counts}"
        )
    return freq, plan, col


def cmd_plan(args) -> int:
    _, freq = dataio.read_categorical_csv(args.input, args.column)
    target = freq.index_of(args.target)
    plan = plan_blocks(freq, target, args.xi)
    t1 = freq.counts[target]
    print(f"target category : {args.target!r} (T1={t1}, n={freq.n}, k={freq.k})")
    if plan.is_noop:
        print(f"no obfuscation needed: T1={t1} >= 1/xi={1 / plan.xi_achieved:g}")
    else:
        print(f"theta*          : {plan.theta:.6f}")
        print(f"block size K1   : {plan.k1}")
        print(f"block           : {[freq.labels[i] for i in plan.target_block]}")
    if plan.relaxed:
        print(f"relaxed         : xi {plan.xi_requested:g} infeasible, achieved xi={plan.xi_achieved:g}")
    else:
        print(f"xi achieved     : {plan.xi_achieved:g}")
    if args.out:
        dataio.dump_json(dataio.plan_to_dict(freq, plan), args.out, args.pretty)
    return EXIT_OK


def cmd_perturb(args) -> int:
    freq, plan, col = _load_inputs(args)
    m = build_ifpr(freq, plan)
    z = perturb(col, m, args.seed)
    dataio.write_perturbed_csv(args.input, args.column, z.decoded(), args.out)
    matrix_out = args.matrix_out or Path(args.out).with_name("matrix.json")
    dataio.dump_json(dataio.matrix_to_dict(m, freq.labels), matrix_out, args.pretty)
    print(f"wrote {args.out} ({len(z)} records, seed={args.seed}, rng={RNG_NAME})")
    print(format_matrix_rounded(m), end="")
    return EXIT_OK


def cmd_risk(args) -> int:
    freq, plan, _ = _load_inputs(args)
    m = build_ifpr(freq, plan)
    for report in (verify_row_stochastic(m), verify_invariance(m, freq)):
        if not report:
            raise ValidationError(report.message)
    profile = risk_profile(freq, plan, m, args.amax)
    dataio.dump_json(dataio.risk_to_dict(profile, freq, plan), args.out, args.pretty)
    print(f"max R1 = {profile.max_risk:.8f} at a={profile.argmax_a} "
          f"(psi bound {profile.psi_bound:.8f}, xi {profile.xi_target:g})")
    print(f"certified: {profile.certified}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    freq, plan, col = _load_inputs(args)
    m = build_ifpr(freq, plan)
    results = simulate_replicates(
        col, m, args.replicates, args.seed, plan.target_index, args.target_record, args.jobs
    )
    if args.per_replicate_csv:
        with open(args.per_replicate_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(["replicate", "seed", *(f"S_{lab}" for lab in freq.labels),
                               "target_released", "match_probability", "intruder_success"]) + "\n")
            for r in results:
                fh.write(",".join(map(str, [r.replicate, r.seed, *r.counts, int(r.target_released),
                                            repr(r.match_probability), int(r.intruder_success)])) + "\n")
    report = summarize(results, col, m, args.seed)
    dataio.dump_json(dataio.report_to_dict(report, freq.labels), args.out, args.pretty)
    print("mse per category: " + " ".join(f"{x:.4e}" for x in report.mse_per_category))
    print(f"average correct-match probability: {report.avg_correct_match:.8f}")
    print(f"intruder success rate: {report.intruder_success_rate:.4f}")
    return EXIT_OK


def cmd_table1(args) -> int:
    table = reproduce_table1()
    if args.json:
        print(json.dumps({"t1": list(TABLE1_T1), "xi": list(TABLE1_XI), "k1": table.tolist()}))
        return EXIT_OK
    print(format_table1(table), end="")
    return EXIT_OK


def format_table1(table) -> str:
    head = "T1\\xi " + " ".join(f"{x:>5g}" for x in TABLE1_XI)
    lines = [head]
    for t1, row in zip(TABLE1_T1, table):
        lines.append(f"{t1:>5d} " + " ".join(f"{v:>5d}" for v in row))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipram", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p, plan=True):
        p.add_argument("--input", required=True, help="CSV file with a header row")
        p.add_argument("--column", required=True, help="categorical column to protect")
        if plan:
            p.add_argument("--plan", required=True, help="plan.json written by 'ipram plan'")
        p.add_argument("--pretty", action="store_true", help="indent JSON output")

    p = sub.add_parser("plan", help="choose theta and the block for a target category")
    data_args(p, plan=False)
    p.add_argument("--target", required=True, help="label of the category to protect")
    p.add_argument("--xi", type=float, required=True, help="security level in (0, 1)")
    p.add_argument("--out", default="plan.json")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("perturb", help="apply the plan's matrix to the column")
    data_args(p)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True, help="perturbed CSV path")
    p.add_argument("--matrix-out", default=None, help="default: matrix.json next to --out")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("risk", help="exact correct-match risk profile")
    data_args(p)
    p.add_argument("--amax", type=int, default=None, help="largest released count to evaluate")
    p.add_argument("--out", default="risk.json")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("simulate", help="Monte Carlo MSE and correct-match rate")
    data_args(p)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--target-record", type=int, default=None,
                   help="0-based row of the protected unit (default: first in the category)")
    p.add_argument("--out", default="report.json")
    p.add_argument("--per-replicate-csv", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table1", help="minimum block sizes over T1 = 1..10")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "replicates", 1) < 1:
            raise ValidationError("--replicates must be >= 1")
        return args.func(args)
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
