"""Experiment plans, per-instance records, the sat/unsat-balanced runner and the
external solver wrapper."""
from __future__ import annotations

import json
import logging
import math
import os
import platform
import shutil
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import bounds, costs, rng
from .backtrack import DEFAULT_NODE_BUDGET, PREDICATES, explore_tree, warm_up
from .errors import (
    InconsistentResultError,
    NodeBudgetExceeded,
    PlanError,
    SolverError,
    SolverNotFound,
    SolverTimeout,
    UnreachableClassError,
)
from .instances import THRESHOLD_RATIOS, CnfFormula, format_beta, generate, write_dimacs

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

INF = math.inf
BETAS = (0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, INF)

# n-ranges per (k, beta): backtracker rows
BACKTRACK_RANGES = {
    3: {5.0: (10, 56), 10.0: (10, 55), INF: (10, 49)},
    4: {3.0: (10, 45), 5.0: (10, 42), 10.0: (10, 41), INF: (10, 40)},
    5: {2.0: (10, 45), 3.0: (10, 40), 5.0: (10, 41), 10.0: (10, 39), INF: (10, 34)},
    6: {1.5: (10, 42), 2.0: (10, 42), 3.0: (10, 36), 5.0: (10, 35), 10.0: (10, 34), INF: (10, 28)},
    7: dict(zip(BETAS, [(10, 47), (10, 40), (10, 35), (10, 35), (10, 31), (10, 29), (10, 29), (10, 28)])),
    8: dict(zip(BETAS, [(11, 40), (11, 38), (11, 33), (11, 30), (11, 29), (11, 25), (11, 26), (10, 25)])),
    9: dict(zip(BETAS, [(12, 27), (12, 24), (12, 21), (12, 21), (12, 21), (12, 21), (12, 21), (11, 24)])),
    10: dict(zip(BETAS, [(13, 31), (13, 27), (13, 24), (13, 23), (13, 22), (13, 21), (13, 21), (12, 22)])),
    11: dict(zip(BETAS, [(14, 21), (14, 20), (14, 20), (14, 20), (14, 19), (14, 19), (14, 19), (13, 20)])),
    12: dict(zip(BETAS, [(15, 19), (15, 18), (15, 18), (15, 18), (15, 18), (15, 17), (15, 17), (14, 19)])),
}

# n-ranges per (k, beta) used with an external solver
SOLVER_RANGES = {
    3: {5.0: (160, 279), 10.0: (160, 262), INF: (160, 250)},
    4: {3.0: (64, 130), 5.0: (64, 113), 10.0: (64, 103), INF: (64, 94)},
    5: {2.0: (47, 119), 3.0: (47, 99), 5.0: (47, 86), 10.0: (47, 78), INF: (47, 71)},
    6: {1.5: (30, 91), 2.0: (30, 85), 3.0: (30, 71), 5.0: (30, 46), 10.0: (30, 60), INF: (30, 54)},
    7: dict(zip(BETAS, [(25, 77), (25, 105), (25, 83), (25, 71), (25, 60), (25, 53), (25, 49), (25, 44)])),
    8: dict(zip(BETAS, [(20, 84), (20, 80), (20, 63), (20, 61), (20, 52), (20, 47), (20, 40), (20, 40)])),
    9: dict(zip(BETAS, [(15, 75), (15, 66), (15, 54), (15, 45), (15, 39), (15, 36), (15, 33), (15, 37)])),
    10: dict(zip(BETAS, [(15, 102), (15, 73), (15, 54), (15, 47), (15, 42), (15, 38), (15, 36), (15, 33)])),
    11: dict(zip(BETAS, [(14, 67), (14, 50), (14, 40), (14, 37), (14, 34), (14, 33), (14, 32), (14, 32)])),
    12: dict(zip(BETAS, [(15, 56), (15, 41), (15, 35), (15, 33), (15, 28), (15, 29), (15, 28), (15, 30)])),
}

DEFAULT_SAMPLES = 30
RETRY_CAP = 10_000


def beta_code(beta: float) -> int:
    """Integer tag of beta for seed derivation: 0 for infinity, else 1000*beta."""
    return 0 if math.isinf(beta) else int(round(beta * 1000))


def parse_beta(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "none"):
        return INF
    beta = float(value)
    if not beta > 0:
        raise PlanError(f"beta must be positive or inf, got {value!r}")
    return beta


@dataclass(frozen=True)
class PlanCell:
    k: int
    beta: float
    n_min: int
    n_max: int
    samples_per_class: int = DEFAULT_SAMPLES

    def sizes(self) -> range:
        return range(self.n_min, self.n_max + 1)


@dataclass(frozen=True)
class EvalOptions:
    """Per-instance settings shared by ``run`` and ``solve``."""

    delta: float = 1e-3
    predicate: str = "ordered"
    detection_form: str = "smooth"
    node_budget: int = DEFAULT_NODE_BUDGET
    grover_samples: int = 0
    solver: str | None = None
    solver_args: tuple = ()
    timeout_s: float = 3600.0


@dataclass
class ExperimentPlan:
    cells: list[PlanCell]
    delta: float = 1e-3
    seed: int = 0
    solver: str | None = None
    solver_args: list[str] = field(default_factory=list)
    timeout_s: float = 3600.0
    node_budget: int = DEFAULT_NODE_BUDGET
    cost_profile: str | None = None
    predicate: str = "ordered"
    detection_form: str = "smooth"
    grover_samples: int = 0
    retry_cap: int = RETRY_CAP

    def __post_init__(self):
        if not self.cells:
            raise PlanError("plan has no cells")
        for c in self.cells:
            if c.samples_per_class < 1:
                raise PlanError(f"samples_per_class must be >= 1 in cell k={c.k} beta={c.beta}")
            if c.n_min > c.n_max or c.n_min < 1:
                raise PlanError(f"empty n-range {c.n_min}..{c.n_max} for k={c.k}")
            if c.k not in THRESHOLD_RATIOS:
                raise PlanError(f"k={c.k} has no threshold ratio")
            if c.n_min < c.k:
                raise PlanError(f"n={c.n_min} < k={c.k}")
        if not 0 < self.delta < 0.5:
            raise PlanError(f"delta must be in (0, 1/2), got {self.delta}")
        if self.predicate not in PREDICATES:
            raise PlanError(f"predicate must be one of {PREDICATES}")
        if self.detection_form not in ("smooth", "rounded"):
            raise PlanError("detection_form must be 'smooth' or 'rounded'")

    def options(self) -> EvalOptions:
        return EvalOptions(
            self.delta, self.predicate, self.detection_form, self.node_budget,
            self.grover_samples, self.solver, tuple(self.solver_args), self.timeout_s,
        )

    def cost_spec(self) -> costs.CostModelSpec:
        if self.cost_profile:
            return costs.load_cost_profile(self.cost_profile)
        return costs.CostModelSpec()


def default_cells(samples_per_class: int = DEFAULT_SAMPLES, ranges=None, ks=None, betas=None) -> list[PlanCell]:
    ranges = ranges or BACKTRACK_RANGES
    cells = []
    for k, row in sorted(ranges.items()):
        if ks and k not in ks:
            continue
        for beta, (lo, hi) in row.items():
            if betas and beta not in betas:
                continue
            cells.append(PlanCell(k, beta, lo, hi, samples_per_class))
    return cells


_PLAN_KEYS = {
    "delta", "seed", "solver", "solver_args", "timeout_s", "node_budget", "cost_profile",
    "predicate", "detection_form", "grover_samples", "retry_cap", "cells", "samples_per_class",
}
_CELL_KEYS = {"k", "beta", "n", "n_min", "n_max", "samples_per_class"}


def plan_from_dict(data: dict, base_dir: str | None = None) -> ExperimentPlan:
    unknown = set(data) - _PLAN_KEYS
    if unknown:
        raise PlanError(f"unknown plan keys {sorted(unknown)}")
    samples = int(data.get("samples_per_class", DEFAULT_SAMPLES))
    raw_cells = data.get("cells")
    try:
        if raw_cells is None:
            cells = default_cells(samples)
        else:
            cells = []
            for c in raw_cells:
                bad = set(c) - _CELL_KEYS
                if bad:
                    raise PlanError(f"unknown cell keys {sorted(bad)}")
                k = int(c["k"])
                beta = parse_beta(c.get("beta", "inf"))
                if "n" in c:
                    lo, hi = (int(c["n"][0]), int(c["n"][-1]))
                elif "n_min" in c or "n_max" in c:
                    lo, hi = int(c["n_min"]), int(c["n_max"])
                else:
                    lo, hi = BACKTRACK_RANGES[k][beta]
                cells.append(PlanCell(k, beta, lo, hi, int(c.get("samples_per_class", samples))))
        kwargs = {k: data[k] for k in _PLAN_KEYS - {"cells", "samples_per_class"} if k in data}
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"bad plan: {exc!r}") from None
    profile = kwargs.get("cost_profile")
    if profile and base_dir and not os.path.isabs(profile):
        kwargs["cost_profile"] = os.path.join(base_dir, profile)
    return ExperimentPlan(cells=cells, **kwargs)


def load_plan(path) -> ExperimentPlan:
    """Plan file (TOML)::

        delta = 0.001
        seed = 7
        [[cells]]
        k = 12
        beta = "inf"
        n = [14, 19]
        samples_per_class = 30
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise PlanError(f"{path}: {exc}") from None
    return plan_from_dict(data, os.path.dirname(os.path.abspath(path)))


# -- records -----------------------------------------------------------------

_TIMING_FIELDS = ("classical_wall_time_s", "backtrack_wall_time_s", "solver_wall_time_s", "started_at", "finished_at", "host")


@dataclass
class ExperimentRecord:
    k: int
    beta: float
    n: int
    num_clauses: int
    seed: int
    index: int
    satisfiable: bool
    tree_size: int
    num_solutions: int
    first_solution_depth: int | None
    queries: dict[str, float]
    gates: dict[str, float]
    delta: float
    predicate: str = "ordered"
    detection_rounded: int | None = None
    detection_smooth: float | None = None
    classical_wall_time_s: float | None = None
    backtrack_wall_time_s: float | None = None
    solver_wall_time_s: float | None = None
    solver_satisfiable: bool | None = None
    started_at: str | None = None
    finished_at: str | None = None
    host: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = format_beta(self.beta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        d = dict(d)
        d["beta"] = parse_beta(d["beta"])
        return cls(**d)

    def stable_dict(self) -> dict:
        """Fields that do not depend on timing or the host."""
        d = self.to_dict()
        for key in _TIMING_FIELDS:
            d.pop(key, None)
        return d


@dataclass
class SkippedInstance:
    k: int
    beta: float
    n: int
    seed: int
    index: int
    reason: str


@dataclass
class RunResult:
    records: list[ExperimentRecord]
    skipped: list[SkippedInstance]

    @property
    def partial(self) -> bool:
        return bool(self.skipped)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def evaluate_instance(
    formula: CnfFormula,
    k: int,
    beta: float,
    seed: int,
    index: int,
    plan: EvalOptions,
    cost: costs.CostModelSpec,
) -> ExperimentRecord:
    """Explore the tree, evaluate all bounds and gate costs for one formula."""
    warm_up()
    started = _now()
    n = formula.num_vars
    t0 = time.perf_counter()
    stats = explore_tree(formula, plan.node_budget, plan.predicate)
    bt_time = time.perf_counter() - t0

    solver_time = solver_sat = None
    if plan.solver:
        out = run_external_solver(formula, plan.solver, plan.timeout_s, plan.solver_args)
        solver_time, solver_sat = out.wall_time_s, out.satisfiable
        if solver_sat != stats.satisfiable:
            raise InconsistentResultError(
                f"seed {seed}: solver says satisfiable={solver_sat}, backtracker says {stats.satisfiable}"
            )

    cfg = bounds.cached_config(plan.delta)
    det = bounds.detection_queries(cfg, n, stats.tree_size)
    depth = stats.first_solution_depth if stats.satisfiable else None
    queries = {
        "detection": det.smooth if plan.detection_form == "smooth" else float(det.rounded),
        "search": bounds.search_queries(plan.delta, n, stats.tree_size, n, depth, cfg),
        "grover": bounds.grover_expected_queries(
            bounds.GroverParams(plan.delta, plan.grover_samples), 2**n, stats.num_solutions
        ),
    }
    gates = {}
    for alg, q in queries.items():
        for metric in costs.METRICS:
            gates[f"{alg}.{metric}"] = costs.queries_to_gates(
                q, n, formula.num_clauses, cost, metric, costs.ALGORITHM_KINDS[alg]
            )
    return ExperimentRecord(
        k=k,
        beta=beta,
        n=n,
        num_clauses=formula.num_clauses,
        seed=seed,
        index=index,
        satisfiable=stats.satisfiable,
        tree_size=stats.tree_size,
        num_solutions=stats.num_solutions,
        first_solution_depth=stats.first_solution_depth,
        queries=queries,
        gates=gates,
        delta=plan.delta,
        predicate=plan.predicate,
        detection_rounded=det.rounded,
        detection_smooth=det.smooth,
        classical_wall_time_s=solver_time if solver_time is not None else bt_time,
        backtrack_wall_time_s=bt_time,
        solver_wall_time_s=solver_time,
        solver_satisfiable=solver_sat,
        started_at=started,
        finished_at=_now(),
        host=platform.node() or None,
    )


def instance_seed(plan_seed: int, k: int, beta: float, n: int, index: int) -> int:
    return rng.derive_seed(plan_seed, k, beta_code(beta), n, index)


def _draw(args):
    plan_seed, options, cost, k, beta, n, index = args
    seed = instance_seed(plan_seed, k, beta, n, index)
    formula = generate(n, k, beta, seed)
    try:
        return evaluate_instance(formula, k, beta, seed, index, options, cost)
    except NodeBudgetExceeded as exc:
        return SkippedInstance(k, beta, n, seed, index, str(exc))


def run_experiment(plan: ExperimentPlan, sink=None, jobs: int = 1) -> RunResult:
    """Draw instances per (cell, n) until each class has samples_per_class records.

    Draws are evaluated in batches, possibly in parallel, and accepted strictly
    in draw order, so the result does not depend on ``jobs``. ``sink`` (if
    given) is called with every accepted record as soon as it is accepted.
    """
    cost = plan.cost_spec()
    options = plan.options()
    records: list[ExperimentRecord] = []
    skipped: list[SkippedInstance] = []
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for cell in plan.cells:
            for n in cell.sizes():
                want = cell.samples_per_class
                have = {True: 0, False: 0}
                index = 0
                batch = max(1, 2 * jobs)
                while have[True] < want or have[False] < want:
                    if index >= plan.retry_cap:
                        raise UnreachableClassError(
                            f"k={cell.k} beta={format_beta(cell.beta)} n={n}: {have[True]} sat / "
                            f"{have[False]} unsat after {plan.retry_cap} draws"
                        )
                    todo = [(plan.seed, options, cost, cell.k, cell.beta, n, i) for i in range(index, min(index + batch, plan.retry_cap))]
                    index += len(todo)
                    results = pool.map(_draw, todo) if pool else map(_draw, todo)
                    for out in results:
                        if isinstance(out, SkippedInstance):
                            log.warning("skipped k=%d beta=%s n=%d index=%d: %s", out.k, format_beta(out.beta), out.n, out.index, out.reason)
                            skipped.append(out)
                            continue
                        if have[out.satisfiable] >= want:
                            continue
                        have[out.satisfiable] += 1
                        records.append(out)
                        if sink is not None:
                            sink(out)
                log.info("k=%d beta=%s n=%d done after %d draws", cell.k, format_beta(cell.beta), n, index)
    finally:
        if pool:
            pool.shutdown()
    return RunResult(records, skipped)


# -- persistence -------------------------------------------------------------


class JsonlSink:
    """Append-only JSON Lines writer; one write call per record."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "a")

    def __call__(self, record: ExperimentRecord) -> None:
        self._fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> list[ExperimentRecord]:
    with open(path) as fh:
        return [ExperimentRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


# -- external solver ---------------------------------------------------------


@dataclass(frozen=True)
class SolverResult:
    satisfiable: bool
    wall_time_s: float


def resolve_solver(path: str | None) -> str:
    path = path or os.environ.get("QSAT_SOLVER")
    if not path:
        raise SolverNotFound("no solver given and QSAT_SOLVER is unset")
    found = shutil.which(path) if os.sep not in path else (path if os.access(path, os.X_OK) else None)
    if not found:
        raise SolverNotFound(f"solver {path!r} not found or not executable")
    return found


def run_external_solver(formula: CnfFormula, solver_path: str, timeout_s: float, args=()) -> SolverResult:
    """Run a DIMACS solver on ``formula``; exit code 10 means SAT, 20 UNSAT."""
    exe = resolve_solver(solver_path)
    fd, cnf = tempfile.mkstemp(suffix=".cnf")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(write_dimacs(formula))
        t0 = time.perf_counter()
        try:
            proc = subprocess.run([exe, *args, cnf], capture_output=True, text=True, timeout=timeout_s)
        except subprocess.TimeoutExpired:
            raise SolverTimeout(timeout_s) from None
        elapsed = time.perf_counter() - t0
    finally:
        os.unlink(cnf)
    if proc.returncode == 10:
        return SolverResult(True, elapsed)
    if proc.returncode == 20:
        return SolverResult(False, elapsed)
    raise SolverError(proc.returncode, proc.stderr)
