"""Benchmark harness: solver grids, result files, performance profiles.

Each grid entry expands into (replications) runs; a replication bumps the
problem seed (for seeded families) and draws its own starting point when
requested, so identical configurations reproduce identical result files
apart from timing fields.  Runs execute independently; results stream to
one JSON file per run plus a flat CSV summary.
"""

import csv
import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alm import AlmParams, SpectralParams, solve_alm
from .inner import LineSearchParams
from .pd import PdParams, solve_pd
from .records import STATUS_CONVERGED, Certificate, History, RunRecord, final_feasibility
from .zoo import (
    make_problem,
    oracle_disjunctive_enumeration,
    oracle_portfolio_global,
    oracle_sparse_qp_global,
)

SOLVERS = ("pd", "pdlm", "alm", "enumeration-oracle")

CSV_COLUMNS = (
    "problem",
    "solver",
    "f",
    "residual",
    "outer_iters",
    "inner_iters",
    "projections",
    "seconds",
    "status",
)

OUTPUT_DIR_ENV = "PENDEC_OUTPUT_DIR"
THREADS_ENV = "PENDEC_THREADS"


@dataclass
class RunSpec:
    problem: dict  # zoo description {"family": ..., params...}
    solver: str
    params: dict = field(default_factory=dict)
    replications: int = 1
    seed_base: int = 0
    start: dict = field(default_factory=lambda: {"kind": "default"})
    vary_problem_seed: bool = True

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass
class BenchConfig:
    runs: list
    output_dir: str = ""
    time_limit_s: float = 0.0

    def __post_init__(self):
        if not self.runs:
            raise ValueError("empty benchmark grid")
        self.runs = [r if isinstance(r, RunSpec) else RunSpec(**r) for r in self.runs]
        if self.time_limit_s < 0:
            raise ValueError("time limit must be positive")

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def problem_key(problem_dict, replication):
    """Stable identifier of one problem instance inside a grid."""
    return json.dumps(problem_dict, sort_keys=True) + f"#rep{replication}"


def _dataclass_from_dict(cls, overrides):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**overrides)


def build_pd_params(overrides, multipliers):
    overrides = dict(overrides)
    if "line_search" in overrides and isinstance(overrides["line_search"], dict):
        overrides["line_search"] = LineSearchParams(**overrides["line_search"])
    overrides.setdefault("multiplier_mode", "both" if multipliers else "none")
    return _dataclass_from_dict(PdParams, overrides)


def build_alm_params(overrides):
    overrides = dict(overrides)
    if "spectral" in overrides and isinstance(overrides["spectral"], dict):
        overrides["spectral"] = SpectralParams(**overrides["spectral"])
    return _dataclass_from_dict(AlmParams, overrides)


def expand_tasks(config):
    tasks = []
    for spec in config.runs:
        for rep in range(spec.replications):
            pdict = dict(spec.problem)
            if spec.vary_problem_seed and "seed" in pdict:
                pdict["seed"] = pdict["seed"] + rep
            tasks.append(
                {
                    "problem": pdict,
                    "solver": spec.solver,
                    "params": dict(spec.params),
                    "replication": rep,
                    "seed_base": spec.seed_base,
                    "start": dict(spec.start),
                    "time_limit_s": config.time_limit_s,
                }
            )
    return tasks


def _starting_point(problem, start, seed_base, replication):
    kind = start.get("kind", "default")
    if kind == "default":
        return None
    if kind == "uniform":
        rng = np.random.default_rng(np.random.SeedSequence((seed_base, replication)))
        return rng.uniform(start["low"], start["high"], problem.dim_x)
    raise ValueError(f"unknown start kind {kind!r}")


def _oracle_record(problem, pdict, replication, started):
    family = pdict["family"]
    if family in ("sparse_qp", "beck_eldar"):
        f, x = oracle_sparse_qp_global(problem)
    elif family == "portfolio":
        f, x = oracle_portfolio_global(problem)
    elif family == "disjunctive_logistic":
        f, x = oracle_disjunctive_enumeration(problem)
    else:
        raise ValueError(f"no enumeration oracle for family {family!r}")
    return RunRecord(
        solver="enumeration-oracle",
        problem=pdict,
        params={},
        status=STATUS_CONVERGED,
        f=float(f),
        x=x,
        y=x.copy(),
        coupling_residual=0.0,
        constraint_residual=0.0,
        history=History(),
        certificate=Certificate(),
        counters={"objective_evals": 0, "constraint_evals": 0, "projections": 0},
        wall_time_s=time.perf_counter() - started,
    )


def run_task(task):
    """Execute one (problem, solver, replication) cell; returns a RunRecord."""
    started = time.perf_counter()
    pdict = task["problem"]
    problem = make_problem(pdict)
    x0 = _starting_point(problem, task["start"], task["seed_base"], task["replication"])
    solver = task["solver"]
    params = dict(task["params"])
    if task.get("time_limit_s"):
        params.setdefault("time_limit_s", task["time_limit_s"])

    if solver == "enumeration-oracle":
        record = _oracle_record(problem, pdict, task["replication"], started)
    elif solver in ("pd", "pdlm"):
        record = solve_pd(problem, build_pd_params(params, solver == "pdlm"), x0=x0)
        record.solver = solver
    elif solver == "alm":
        record = solve_alm(problem, build_alm_params(params), x0=x0)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    record.problem = dict(pdict)
    record.problem["replication"] = task["replication"]
    return record


class ResultWriter:
    """Streams one JSON document per run plus an append-only CSV summary."""

    def __init__(self, output_dir):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)
        self.csv_path = os.path.join(output_dir, "summary.csv")
        if not os.path.exists(self.csv_path):
            with open(self.csv_path, "w", newline="") as fh:
                csv.writer(fh).writerow(CSV_COLUMNS)
        self._count = len(self._existing())

    def _existing(self):
        return sorted(
            f for f in os.listdir(self.output_dir) if f.startswith("run_") and f.endswith(".json")
        )

    def write(self, record):
        name = f"run_{self._count:05d}_{record.solver}.json"
        with open(os.path.join(self.output_dir, name), "w") as fh:
            fh.write(record.to_json())
        with open(self.csv_path, "a", newline="") as fh:
            csv.writer(fh).writerow(summary_row(record))
        self._count += 1


def summary_row(record):
    return [
        record.problem.get("family", record.problem.get("name", "custom")),
        record.solver,
        record.f,
        final_feasibility(record),
        len(record.history.tau),
        sum(record.history.inner_iterations),
        record.counters.get("projections", 0),
        record.wall_time_s,
        record.status,
    ]


def run_grid(config, threads=None, writer=None):
    """Run every cell of the grid; deterministic given seeds.

    Per-run failures are recorded (status/error fields) without aborting
    the rest of the grid.  threads > 1 runs cells in separate processes;
    each run itself stays sequential.
    """
    tasks = expand_tasks(config)
    if writer is None and config.output_dir:
        writer = ResultWriter(config.output_dir)
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    records = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for record in pool.map(run_task, tasks, chunksize=1):
                records.append(record)
                if writer:
                    writer.write(record)
    else:
        for task in tasks:
            records.append(run_task(task))
            if writer:
                writer.write(records[-1])
    return records


def load_records(output_dir):
    records = []
    for name in sorted(os.listdir(output_dir)):
        if name.startswith("run_") and name.endswith(".json"):
            with open(os.path.join(output_dir, name)) as fh:
                records.append(RunRecord.from_json(fh.read()))
    return records


def _metric_value(record, metric):
    if metric == "runtime":
        return record.wall_time_s
    if metric == "projections":
        return float(record.counters.get("projections", 0))
    raise ValueError("metric must be 'runtime' or 'projections'")


def default_failure_rule(record):
    return record.status != STATUS_CONVERGED


def gap_failure_rule(oracle_values, tol=1e-4):
    """Failure when a run misses the certified global value (profile style:
    such runtimes count as infinite)."""

    def rule(record):
        key = problem_key(record.problem, record.problem.get("replication", 0))
        f_star = oracle_values[key]
        return record.status != STATUS_CONVERGED or record.f > f_star + tol * max(1.0, abs(f_star))

    return rule


def performance_profile(records, metric="runtime", failure_rule=None):
    """Dolan-More profile: per solver the step function rho(ratio).

    Returns {solver: (ratios, rho)} with ratios the sorted breakpoints.
    Failed runs get infinite ratio; a problem where every solver failed
    keeps its place in the denominator.
    """
    if failure_rule is None:
        failure_rule = default_failure_rule
    by_problem = {}
    solvers = set()
    for rec in records:
        if rec.solver == "enumeration-oracle":
            continue
        key = problem_key(rec.problem, rec.problem.get("replication", 0))
        solvers.add(rec.solver)
        value = np.inf if failure_rule(rec) else _metric_value(rec, metric)
        by_problem.setdefault(key, {})[rec.solver] = value
    solvers = sorted(solvers)
    if not solvers:
        raise ValueError("no solver records given")
    shared = {k: v for k, v in by_problem.items() if len(v) == len(solvers)}
    if not shared:
        raise ValueError("no problem was attempted by every solver")
    n_problems = len(shared)
    ratios = {s: [] for s in solvers}
    for values in shared.values():
        best = min(values.values())
        for s in solvers:
            v = values[s]
            if not np.isfinite(v):
                ratios[s].append(np.inf)
            elif v == best:
                ratios[s].append(1.0)
            else:
                ratios[s].append(v / best)
    curves = {}
    for s in solvers:
        finite = np.sort([r for r in ratios[s] if np.isfinite(r)])
        rho = np.arange(1, finite.size + 1) / n_problems
        curves[s] = (finite, rho)
    return curves


def relative_gap_distribution(records, oracle_values):
    """Cumulative distribution of (f - f*) / max(1, |f*|), clipped below at 0."""
    gaps = {}
    for rec in records:
        if rec.solver == "enumeration-oracle":
            continue
        key = problem_key(rec.problem, rec.problem.get("replication", 0))
        if key not in oracle_values:
            raise KeyError(f"missing oracle value for {key}")
        f_star = oracle_values[key]
        gap = max(0.0, (rec.f - f_star) / max(1.0, abs(f_star)))
        gaps.setdefault(rec.solver, []).append(gap)
    out = {}
    for solver, values in gaps.items():
        v = np.sort(values)
        out[solver] = (v, np.arange(1, v.size + 1) / v.size)
    return out


def oracle_values_from_records(records):
    """Collect {problem_key: f*} from enumeration-oracle records."""
    return {
        problem_key(r.problem, r.problem.get("replication", 0)): r.f
        for r in records
        if r.solver == "enumeration-oracle"
    }


def write_curves_csv(path, curves, metric):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "metric", "ratio", "rho"])
        for solver, (ratios, rho) in sorted(curves.items()):
            for r, p in zip(ratios, rho):
                writer.writerow([solver, metric, r, p])


def write_gaps_csv(path, gaps):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "gap", "fraction"])
        for solver, (values, fractions) in sorted(gaps.items()):
            for g, p in zip(values, fractions):
                writer.writerow([solver, g, p])
