from __future__ import annotations

import json
import math
import os
import stat
import sys
import textwrap

import pytest

from qsatbench.costs import CostModelSpec
from qsatbench.errors import (
    InconsistentResultError,
    PlanError,
    SolverError,
    SolverNotFound,
    SolverTimeout,
    UnreachableClassError,
)
from qsatbench.harness import (
    BACKTRACK_RANGES,
    EvalOptions,
    ExperimentPlan,
    ExperimentRecord,
    JsonlSink,
    PlanCell,
    default_cells,
    evaluate_instance,
    instance_seed,
    load_plan,
    read_records,
    run_experiment,
    run_external_solver,
)
from qsatbench.instances import CnfFormula, generate

BRUTE_SOLVER = """\
#!{python}
import itertools, sys
lines = [l.split() for l in open(sys.argv[-1]) if l.strip() and l[0] not in "cp"]
n = int(open(sys.argv[-1]).read().split("p cnf")[1].split()[0])
clauses = [[int(x) for x in l[:-1]] for l in lines]
for bits in itertools.product((False, True), repeat=n):
    if all(any(bits[abs(x) - 1] == (x > 0) for x in c) for c in clauses):
        sys.exit({sat})
sys.exit({unsat})
"""


def script(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


@pytest.fixture
def brute_solver(tmp_path):
    return script(tmp_path, "brute", BRUTE_SOLVER.format(python=sys.executable, sat=10, unsat=20))


def small_plan(**kw):
    return ExperimentPlan([PlanCell(3, math.inf, 10, 10, 2)], seed=4, **kw)


def test_two_plus_two():
    result = run_experiment(small_plan())
    assert len(result.records) == 4
    assert sum(r.satisfiable for r in result.records) == 2
    assert not result.partial
    for r in result.records:
        assert r.queries["detection"] <= r.queries["search"]
        assert r.classical_wall_time_s is not None
        assert r.seed == instance_seed(4, 3, math.inf, 10, r.index)
        assert set(r.gates) == {f"{a}.{m}" for a in r.queries for m in ("tdepth", "tcount")}


def test_deterministic_and_independent_of_jobs():
    plan = ExperimentPlan([PlanCell(4, 2.0, 8, 9, 2)], seed=9)
    a = [r.stable_dict() for r in run_experiment(plan).records]
    b = [r.stable_dict() for r in run_experiment(plan).records]
    c = [r.stable_dict() for r in run_experiment(plan, jobs=2).records]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True) == json.dumps(c, sort_keys=True)


def test_record_round_trip(tmp_path):
    records = run_experiment(small_plan()).records
    path = tmp_path / "records.jsonl"
    with JsonlSink(path) as sink:
        for r in records:
            sink(r)
    assert read_records(path) == records
    assert ExperimentRecord.from_dict(json.loads(json.dumps(records[0].to_dict()))) == records[0]


def test_sink_called_per_record():
    seen = []
    run_experiment(small_plan(), sink=seen.append)
    assert len(seen) == 4


def test_budget_exhaustion_skips():
    plan = ExperimentPlan([PlanCell(3, math.inf, 12, 12, 1)], node_budget=5, retry_cap=6)
    with pytest.raises(UnreachableClassError):
        run_experiment(plan)


def test_unreachable_class():
    # one draw can never fill both classes
    plan = ExperimentPlan([PlanCell(3, math.inf, 10, 10, 1)], retry_cap=1)
    with pytest.raises(UnreachableClassError):
        run_experiment(plan)


@pytest.mark.parametrize(
    "kw",
    [dict(delta=0.5), dict(predicate="lazy"), dict(detection_form="exact")],
)
def test_plan_validation(kw):
    with pytest.raises(PlanError):
        small_plan(**kw)


@pytest.mark.parametrize(
    "cell",
    [PlanCell(3, 1.0, 10, 9, 2), PlanCell(3, 1.0, 10, 12, 0), PlanCell(13, 1.0, 20, 22, 2), PlanCell(5, 1.0, 3, 6, 2)],
)
def test_plan_cell_validation(cell):
    with pytest.raises(PlanError):
        ExperimentPlan([cell])


def test_default_cells_cover_ranges():
    cells = default_cells()
    assert len(cells) == sum(len(row) for row in BACKTRACK_RANGES.values())
    assert all(c.samples_per_class == 30 for c in cells)


def test_load_plan(tmp_path):
    (tmp_path / "cost.toml").write_text("measurement_time_s = 1e-8\n")
    (tmp_path / "plan.toml").write_text(
        textwrap.dedent(
            """\
            seed = 3
            delta = 0.01
            cost_profile = "cost.toml"
            [[cells]]
            k = 3
            beta = "inf"
            n_min = 10
            n_max = 11
            samples_per_class = 2
            """
        )
    )
    plan = load_plan(tmp_path / "plan.toml")
    assert plan.seed == 3 and plan.delta == 0.01
    assert plan.cells == [PlanCell(3, math.inf, 10, 11, 2)]
    assert plan.cost_spec().measurement_time_s == 1e-8


def test_load_plan_default_range(tmp_path):
    (tmp_path / "plan.toml").write_text("[[cells]]\nk = 12\nbeta = \"inf\"\n")
    cell = load_plan(tmp_path / "plan.toml").cells[0]
    assert (cell.n_min, cell.n_max) == BACKTRACK_RANGES[12][math.inf]


def test_load_plan_unknown_cell_key(tmp_path):
    (tmp_path / "plan.toml").write_text("[[cells]]\nk = 3\nn_low = 5\n")
    with pytest.raises(PlanError):
        load_plan(tmp_path / "plan.toml")


def test_load_plan_unknown_key(tmp_path):
    (tmp_path / "plan.toml").write_text("speed = 3\n[[cells]]\nk = 3\nbeta = 1\nn_min = 5\nn_max = 6\n")
    with pytest.raises(PlanError):
        load_plan(tmp_path / "plan.toml")


def test_solver_sat_and_unsat(brute_solver):
    assert run_external_solver(CnfFormula(1, [(1,)]), brute_solver, 30).satisfiable
    out = run_external_solver(CnfFormula(1, [(1,), (-1,)]), brute_solver, 30)
    assert not out.satisfiable
    assert out.wall_time_s > 0


def test_solver_timeout(tmp_path):
    slow = script(tmp_path, "slow", f"#!{sys.executable}\nimport time\ntime.sleep(5)\n")
    with pytest.raises(SolverTimeout):
        run_external_solver(generate(30, 3, math.inf, 0), slow, 0.000001)


def test_solver_other_exit(tmp_path):
    bad = script(tmp_path, "bad", f"#!{sys.executable}\nimport sys\nsys.exit(1)\n")
    with pytest.raises(SolverError):
        run_external_solver(CnfFormula(1, [(1,)]), bad, 10)


def test_solver_missing(tmp_path, monkeypatch):
    with pytest.raises(SolverNotFound):
        run_external_solver(CnfFormula(1, [(1,)]), str(tmp_path / "nope"), 10)
    monkeypatch.delenv("QSAT_SOLVER", raising=False)
    with pytest.raises(SolverNotFound):
        run_external_solver(CnfFormula(1, [(1,)]), None, 10)


def test_solver_from_environment(brute_solver, monkeypatch):
    monkeypatch.setenv("QSAT_SOLVER", brute_solver)
    assert run_external_solver(CnfFormula(1, [(1,)]), None, 30).satisfiable


def test_plan_with_solver(brute_solver):
    records = run_experiment(small_plan(solver=brute_solver)).records
    for r in records:
        assert r.solver_satisfiable == r.satisfiable
        assert r.classical_wall_time_s == r.solver_wall_time_s


def test_inconsistent_solver(tmp_path):
    liar = script(tmp_path, "liar", BRUTE_SOLVER.format(python=sys.executable, sat=20, unsat=10))
    f = CnfFormula(1, [(1,)])
    with pytest.raises(InconsistentResultError):
        evaluate_instance(f, 1, math.inf, 0, 0, EvalOptions(solver=liar), CostModelSpec())


def test_rounded_detection_form():
    f = generate(10, 3, math.inf, 1)
    smooth = evaluate_instance(f, 3, math.inf, 1, 0, EvalOptions(), CostModelSpec())
    rounded = evaluate_instance(f, 3, math.inf, 1, 0, EvalOptions(detection_form="rounded"), CostModelSpec())
    assert smooth.queries["detection"] == smooth.detection_smooth
    assert rounded.queries["detection"] == rounded.detection_rounded
    assert smooth.queries["search"] == rounded.queries["search"]
