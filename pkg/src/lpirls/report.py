"""Solve reports, the solver dispatcher behind the CLI, and plot data."""

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import EmptyInput, LpError, SearchCollapsed
from .low_precision import l2p_minimization
from .numerics import lp_norm
from .reductions import solve_small_p_residual
from .refinement import lp_refine

SOLVERS = ("low_precision", "refinement", "small_p")
ALIASES = {
    "low": "low_precision",
    "low_precision": "low_precision",
    "refine": "refinement",
    "refinement": "refinement",
    "small_p": "small_p",
    "auto": "auto",
}


@dataclass
class SolveReport:
    solver: str
    p: float
    epsilon: float
    n: int
    d: int
    linear_solves: int
    residual_calls: int
    wall_time_ms: float
    objective: float
    outcome: str
    seed: int

    def to_json(self):
        row = asdict(self)
        if row["objective"] is not None and not math.isfinite(row["objective"]):
            row["objective"] = None
        return json.dumps(row, sort_keys=False)


REPORT_FIELDS = [f.name for f in fields(SolveReport)]


def resolve_solver(name, p):
    """Map a CLI solver name to one of SOLVERS; ``auto`` picks by p."""
    kind = ALIASES[name]
    if kind == "auto":
        return "small_p" if p < 2 else "refinement"
    return kind


def run_solver(inst, solver, p, epsilon, seed=0):
    """Solve min ||N x - v||_p for ``inst``; returns ``(x, SolveReport)``.

    Only the solve itself is timed. ``linear_solves`` counts every weighted
    least-squares solve, including the initial min-l2 one. ``objective`` is
    ||N x - v||_p (not raised to the p-th power). ``n`` is the row count,
    except for graph instances where it is the node count (the edge count
    varies with the seed, the node count is the size being swept).
    """
    kind = resolve_solver(solver, p)
    m, n = inst.N.shape
    system = inst.system()
    x = None
    calls = 0
    outcome = "primal"
    t0 = time.perf_counter()
    try:
        if kind == "refinement":
            x, rep = lp_refine(system, None, p, epsilon)
            calls = rep.residual_calls
        elif kind == "low_precision":
            if p < 2:
                raise ValueError("low-precision solver needs p >= 2")
            x = l2p_minimization(system, None, epsilon, p / 2.0)
        else:
            if inst.A.shape[0]:
                raise ValueError("small_p CLI path handles unconstrained instances only")
            x, rep = solve_small_p_residual(inst.N, inst.v, p, epsilon, return_report=True)
            system.linear_solves = rep.linear_solves
            calls = rep.residual_calls
    except SearchCollapsed:
        outcome = "certificate"
    except (LpError, ValueError, np.linalg.LinAlgError):
        outcome = "error"
    elapsed = (time.perf_counter() - t0) * 1000.0
    objective = lp_norm(inst.N @ x - inst.v, p) if x is not None else None
    report = SolveReport(
        solver=kind,
        p=float(p),
        epsilon=float(epsilon),
        n=int(inst.meta.get("nodes", m)),
        d=int(n),
        linear_solves=int(system.linear_solves),
        residual_calls=int(calls),
        wall_time_ms=elapsed,
        objective=None if objective is None else float(objective),
        outcome=outcome,
        seed=int(seed),
    )
    return x, report


def emit_plot_data(reports):
    """CSV of mean and population std of linear solves and time per (solver, p, n)."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("no reports to summarise")
    groups = {}
    for r in reports:
        groups.setdefault((r.solver, r.p, r.n), []).append(r)
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["solver", "p", "n", "count", "mean_iters", "std_iters", "mean_time_ms", "std_time_ms"])
    for (solver, p, n), rs in sorted(groups.items()):
        iters = np.array([r.linear_solves for r in rs], dtype=float)
        times = np.array([r.wall_time_ms for r in rs], dtype=float)
        out.writerow(
            [solver, p, n, len(rs), iters.mean(), iters.std(), times.mean(), times.std()]
        )
    return buf.getvalue()


def read_jsonl(lines):
    return [SolveReport(**json.loads(line)) for line in lines if line.strip()]
