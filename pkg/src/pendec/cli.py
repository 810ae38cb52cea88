"""Command-line harness: solve single problems, run grids, post-process.

Exit codes: 0 on success, 1 when any run fails, 2 on configuration errors.
Environment: PENDEC_OUTPUT_DIR sets the default output directory,
PENDEC_THREADS the grid-level process count.
"""

import argparse
import json
import os
import sys

from . import bench
from .records import STATUS_CONVERGED, final_feasibility
from .zoo import FAMILIES

SOLVER_FLAGS = {
    "tau0": float,
    "alpha_tau": float,
    "tau_cap": float,
    "eps_out": float,
    "eps_in": float,
    "delta0": float,
    "delta_decay": float,
    "delta_floor": float,
    "max_outer_iters": int,
    "max_inner_iters": int,
    "multiplier_mode": str,
    "safeguard": float,
    "direction": str,
    "lbfgs_memory": int,
    "j_max": int,
    "step_grad_tol": float,
    "q_floor": float,
    "exact_x_update": str,
    "eta": float,
    "time_limit_s": float,
}

PROBLEM_FLAGS = {
    "n": int,
    "n_cond": float,
    "s": int,
    "nu": float,
    "seed": int,
    "variant": str,
    "kappa": int,
    "tasks": int,
    "dim": int,
    "samples_per_task": int,
    "eta_reg": float,
    "n_components": int,
    "rows_per_component": int,
    "n_constraints": int,
}

ALM_ONLY = {"eta"}
PD_ONLY = {
    "delta0",
    "delta_decay",
    "delta_floor",
    "multiplier_mode",
    "direction",
    "lbfgs_memory",
    "j_max",
    "step_grad_tol",
    "q_floor",
    "exact_x_update",
    "max_inner_iters",
}


def _add_solver_flags(parser):
    for name, typ in SOLVER_FLAGS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", type=typ, default=None, dest=name)


def _collect_params(args, solver):
    params = {}
    for name in SOLVER_FLAGS:
        value = getattr(args, name, None)
        if value is None:
            continue
        if solver == "alm" and name in PD_ONLY:
            continue
        if solver != "alm" and name in ALM_ONLY:
            continue
        params[name] = value
    return params


def _problem_dict(args):
    if args.spec:
        with open(args.spec) as fh:
            return json.load(fh)
    if not args.family:
        raise SystemExit(2)
    pdict = {"family": args.family}
    for name in PROBLEM_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            key = "eta" if name == "eta_reg" else name
            pdict[key] = value
    return pdict


def _default_out(args):
    return args.out or os.environ.get(bench.OUTPUT_DIR_ENV, "")


def cmd_solve(args):
    pdict = _problem_dict(args)
    params = _collect_params(args, args.solver)
    task = {
        "problem": pdict,
        "solver": args.solver,
        "params": params,
        "replication": 0,
        "seed_base": args.start_seed,
        "start": (
            {"kind": "uniform", "low": args.start_low, "high": args.start_high}
            if args.start_low is not None
            else {"kind": "default"}
        ),
        "time_limit_s": args.time_limit_s or 0.0,
    }
    record = bench.run_task(task)
    out = _default_out(args)
    if out:
        bench.ResultWriter(out).write(record)
    print(
        f"{record.solver} on {pdict['family']}: f={record.f:.6g} "
        f"residual={final_feasibility(record):.3e} status={record.status} "
        f"projections={record.counters.get('projections', 0)} "
        f"time={record.wall_time_s:.2f}s"
    )
    return 0 if record.status == STATUS_CONVERGED else 1


def cmd_bench(args):
    with open(args.config) as fh:
        try:
            config = bench.BenchConfig.from_json(fh.read())
        except (ValueError, TypeError, KeyError) as exc:
            print(f"invalid benchmark config: {exc}", file=sys.stderr)
            return 2
    out = _default_out(args)
    if out:
        config.output_dir = out
    records = bench.run_grid(config, threads=args.threads)
    failures = sum(1 for r in records if r.status != STATUS_CONVERGED)
    print(f"{len(records)} runs, {failures} not converged")
    return 1 if failures else 0


def cmd_profile(args):
    records = bench.load_records(args.runs)
    if not records:
        print("no run files found", file=sys.stderr)
        return 2
    out = _default_out(args) or args.runs
    curves = bench.performance_profile(records, metric=args.metric)
    curve_path = os.path.join(out, f"profile_{args.metric}.csv")
    bench.write_curves_csv(curve_path, curves, args.metric)
    print(f"wrote {curve_path}")
    oracle_values = bench.oracle_values_from_records(records)
    if oracle_values:
        gaps = bench.relative_gap_distribution(
            [r for r in records if r.solver != "enumeration-oracle"], oracle_values
        )
        gap_path = os.path.join(out, "relative_gaps.csv")
        bench.write_gaps_csv(gap_path, gaps)
        print(f"wrote {gap_path}")
    return 0


def cmd_verify(args):
    from . import acceptance

    results = acceptance.run_all(criteria=args.criterion or None, quick=args.quick)
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="pendec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a single generated problem")
    solve.add_argument("--family", choices=FAMILIES)
    solve.add_argument("--spec", help="JSON file with a problem description")
    solve.add_argument("--solver", choices=bench.SOLVERS, default="pd")
    for name, typ in PROBLEM_FLAGS.items():
        solve.add_argument(f"--{name.replace('_', '-')}", type=typ, default=None, dest=name)
    _add_solver_flags(solve)
    solve.add_argument("--start-low", type=float, default=None)
    solve.add_argument("--start-high", type=float, default=None)
    solve.add_argument("--start-seed", type=int, default=0)
    solve.add_argument("--out", default=None)
    solve.set_defaults(func=cmd_solve)

    bench_p = sub.add_parser("bench", help="run a benchmark grid from a JSON config")
    bench_p.add_argument("--config", required=True)
    bench_p.add_argument("--out", default=None)
    bench_p.add_argument("--threads", type=int, default=None)
    bench_p.set_defaults(func=cmd_bench)

    profile = sub.add_parser("profile", help="post-process run files into profile curves")
    profile.add_argument("--runs", required=True, help="directory with run_*.json files")
    profile.add_argument("--metric", choices=("runtime", "projections"), default="runtime")
    profile.add_argument("--out", default=None)
    profile.set_defaults(func=cmd_profile)

    verify = sub.add_parser("verify", help="run the acceptance suite")
    verify.add_argument("--criterion", type=int, action="append")
    verify.add_argument("--quick", action="store_true", help="reduced replication counts")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
