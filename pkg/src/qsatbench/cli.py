"""Command-line entry point: ``qsatbench <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from decimal import ROUND_HALF_UP, Decimal

from . import bounds, costs, fitting, harness, oracles, report
from .backtrack import PREDICATES
from .errors import QsatError, UnboundedError
from .instances import format_beta, generate, read_dimacs, save_dimacs

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _beta(text: str) -> float:
    try:
        return harness.parse_beta(text)
    except (ValueError, QsatError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _cost(args) -> costs.CostModelSpec:
    spec = costs.load_cost_profile(args.cost) if getattr(args, "cost", None) else costs.CostModelSpec()
    if getattr(args, "measurement_time", None) is not None:
        spec = costs.CostModelSpec(spec.per_query_tdepth, spec.per_query_tcount, args.measurement_time)
    return spec


def cmd_gen(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    for i in range(args.count):
        seed = harness.rng.derive_seed(args.seed, i)
        m = None
        if args.ratio is not None:
            m = int((Decimal(str(args.ratio)) * args.n).quantize(Decimal(1), rounding=ROUND_HALF_UP))
        f = generate(args.n, args.k, args.beta, seed, m)
        path = os.path.join(args.out_dir, f"k{args.k}_b{format_beta(args.beta)}_n{args.n}_{i:04d}.cnf")
        save_dimacs(f, path)
        print(path)
    return EXIT_OK


def cmd_solve(args) -> int:
    solver = args.solver or os.environ.get("QSAT_SOLVER")
    cost = _cost(args)
    out = open(args.out, "w") if args.out else sys.stdout
    skipped = 0
    try:
        for path in args.files:
            f = read_dimacs(path)
            meta = f.meta
            k = meta.k if meta else max((len(c) for c in f.clauses), default=0)
            beta = meta.beta if meta else math.inf
            seed = meta.seed if meta else 0
            options = harness.EvalOptions(
                delta=args.delta,
                predicate=args.predicate,
                detection_form=args.detection_form,
                node_budget=args.node_budget,
                solver=solver,
                timeout_s=args.timeout,
            )
            try:
                rec = harness.evaluate_instance(f, k, beta, seed, 0, options, cost)
            except harness.NodeBudgetExceeded as exc:
                logging.warning("%s: %s", path, exc)
                skipped += 1
                continue
            out.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_run(args) -> int:
    if args.plan:
        plan = harness.load_plan(args.plan)
    else:
        if args.k is None:
            raise harness.PlanError("give --plan or at least --k")
        cells = []
        for k in args.k:
            for beta in args.beta or [math.inf]:
                lo, hi = harness.BACKTRACK_RANGES.get(k, {}).get(beta, (None, None))
                lo = args.n_min if args.n_min is not None else lo
                hi = args.n_max if args.n_max is not None else hi
                if lo is None or hi is None:
                    raise harness.PlanError(f"no default n-range for k={k} beta={format_beta(beta)}; give --n-min/--n-max")
                cells.append(harness.PlanCell(k, beta, lo, hi, args.samples))
        plan = harness.ExperimentPlan(cells=cells)
    overrides = {
        "delta": args.delta,
        "seed": args.seed,
        "solver": args.solver or plan.solver or os.environ.get("QSAT_SOLVER"),
        "timeout_s": args.timeout,
        "predicate": args.predicate,
        "detection_form": args.detection_form,
        "cost_profile": args.cost,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(plan, key, value)
    plan.__post_init__()
    os.makedirs(args.out, exist_ok=True)
    jsonl = os.path.join(args.out, "records.jsonl")
    if os.path.exists(jsonl):
        os.remove(jsonl)
    with harness.JsonlSink(jsonl) as sink:
        result = harness.run_experiment(plan, sink=sink, jobs=args.jobs)
    report.emit_report(result.records, "csv", os.path.join(args.out, "records.csv"))
    print(f"{len(result.records)} records, {len(result.skipped)} skipped -> {jsonl}")
    return EXIT_PARTIAL if result.partial else EXIT_OK


def _records(path):
    return harness.read_records(path)


def cmd_fit(args) -> int:
    records = _records(args.records)
    cost = _cost(args)
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.k, r.beta), []).append(r)
    print("k,beta,algorithm,metric,slope,intercept")
    for (k, beta), rs in sorted(groups.items()):
        for alg in args.algorithm or fitting.ALGORITHMS:
            metric = "runtime" if alg == "classical" else args.metric
            fit = fitting.fit_log2_linear(fitting.median_by_size(rs, alg, metric, args.filter, cost), metric, alg)
            print(f"{k},{format_beta(beta)},{alg},{metric},{fit.slope:.6f},{fit.intercept:.6f}")
    return EXIT_OK


def cmd_grid(args) -> int:
    cost = _cost(args)
    if args.fits:
        with open(args.fits) as fh:
            table = report.parse_grid_csv(fh.read())
        grid = fitting.grid_from_fits(table, args.basis, cost.measurement_time_s)
    elif args.records:
        grid = fitting.build_grid(_records(args.records), args.basis, args.metric, args.filter, cost)
    else:
        raise harness.PlanError("give --records or --fits")
    os.makedirs(args.out, exist_ok=True)
    for fmt, name in (("csv", "grid.csv"), ("svg", "grid.svg"), ("markdown", "grid.md")):
        report.emit_report(grid, fmt, os.path.join(args.out, name))
    for cell in grid.cells:
        print(f"k={cell.k} beta={format_beta(cell.beta)} {cell.color}")
    return EXIT_OK


def cmd_crossover(args) -> int:
    classical = costs.ScalingFit(args.sc, args.ic, "runtime", "classical")
    quantum = costs.ScalingFit(args.sq, args.iq, "tdepth", "quantum")
    for cq in args.cq:
        res = costs.crossover_time(classical, quantum, cq)
        if res is None:
            print(f"c_q={cq:g}: no crossover (s_c <= s_q)")
        else:
            print(f"c_q={cq:g}: n*={res.n_star:.4f} time={res.time_s:.6g} s ({res.time_s / 3.15576e7:.4g} years)")
    return EXIT_OK


def cmd_oneday(args) -> int:
    fit = costs.ScalingFit(args.slope, args.intercept)
    try:
        n = costs.largest_in_one_day(fit, args.cq)
    except UnboundedError as exc:
        print(exc)
        return EXIT_CONFIG
    print(f"{n:.4f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = oracles.run_suites(args.suite, cases=args.cases, seed=args.seed)
    for r in reports:
        print(r.line())
        for digest, expected, got in r.mismatches[:5]:
            print(f"  {digest}: expected {expected!r}, got {got!r}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_report(args) -> int:
    records = _records(args.records)
    report.emit_report(records, args.format, args.out)
    print(args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    fh = open(args.stats) if args.stats != "-" else sys.stdin
    try:
        stats = json.loads(fh.readline())
        n = int(stats.get("n", stats.get("num_vars", 0)))
        T = int(stats["tree_size"])
        t = int(stats["num_solutions"])
        d = stats.get("first_solution_depth")
    except (KeyError, TypeError, ValueError) as exc:
        raise harness.PlanError(f"bad stats record: {exc!r}") from None
    finally:
        if fh is not sys.stdin:
            fh.close()
    cfg = bounds.cached_config(args.delta)
    R = args.resistance if args.resistance is not None else n
    det = bounds.detection_queries(cfg, R, T)
    out = {
        "delta": args.delta,
        "C": cfg.C,
        "l": cfg.l,
        "detection_smooth": det.smooth,
        "detection_rounded": det.rounded,
        "precision_bits": det.precision_bits,
        "search": bounds.search_queries(args.delta, n, T, R, d if t > 0 else None, cfg),
        "grover": bounds.grover_expected_queries(bounds.GroverParams(args.delta), 2**n, t),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsatbench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common_bounds(sp):
        sp.add_argument("--delta", type=float, default=None)
        sp.add_argument("--predicate", choices=PREDICATES, default=None)
        sp.add_argument("--detection-form", choices=("smooth", "rounded"), default=None)

    g = sub.add_parser("gen", help="sample random k-SAT instances as DIMACS files")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--beta", type=_beta, default=math.inf)
    ratio = g.add_mutually_exclusive_group()
    ratio.add_argument("--ratio", type=float, help="clauses per variable")
    ratio.add_argument("--threshold", action="store_true", help="use the threshold ratio (default)")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", default=".")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="backtrack DIMACS files and print one JSON record each")
    s.add_argument("files", nargs="+")
    s.add_argument("--solver")
    s.add_argument("--timeout", type=float, default=3600.0)
    s.add_argument("--node-budget", type=int, default=harness.DEFAULT_NODE_BUDGET)
    s.add_argument("--cost")
    s.add_argument("--out")
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--predicate", choices=PREDICATES, default="ordered")
    s.add_argument("--detection-form", choices=("smooth", "rounded"), default="smooth")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("run", help="run an experiment plan")
    r.add_argument("--plan")
    r.add_argument("--k", type=int, nargs="+")
    r.add_argument("--beta", type=_beta, nargs="+")
    r.add_argument("--n-min", type=int)
    r.add_argument("--n-max", type=int)
    r.add_argument("--samples", type=int, default=harness.DEFAULT_SAMPLES)
    r.add_argument("--seed", type=int)
    r.add_argument("--solver")
    r.add_argument("--timeout", type=float)
    r.add_argument("--cost")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="results")
    common_bounds(r)
    r.set_defaults(func=cmd_run)

    def fit_args(sp):
        sp.add_argument("--metric", choices=fitting.METRICS, default="queries")
        sp.add_argument("--filter", choices=fitting.FILTERS, default="mixed")
        sp.add_argument("--cost")
        sp.add_argument("--measurement-time", type=float)

    f = sub.add_parser("fit", help="log2-linear fits of per-n medians")
    f.add_argument("--records", required=True)
    f.add_argument("--algorithm", choices=fitting.ALGORITHMS, nargs="+")
    fit_args(f)
    f.set_defaults(func=cmd_fit)

    gr = sub.add_parser("grid", help="colour the (k, beta) grid")
    gr.add_argument("--records")
    gr.add_argument("--fits", help="grid CSV with k,beta,algorithm,slope,intercept")
    gr.add_argument("--basis", choices=("scaling", "one_day"), default="scaling")
    gr.add_argument("--out", default="grid")
    fit_args(gr)
    gr.set_defaults(func=cmd_grid)

    c = sub.add_parser("crossover", help="crossover time of a classical and a quantum fit")
    c.add_argument("--sc", type=float, required=True)
    c.add_argument("--ic", type=float, required=True)
    c.add_argument("--sq", type=float, required=True)
    c.add_argument("--iq", type=float, required=True)
    c.add_argument("--cq", type=float, nargs="+", default=[1e-6, 1e-7, 1e-8])
    c.set_defaults(func=cmd_crossover)

    o = sub.add_parser("oneday", help="largest n solvable in one day")
    o.add_argument("--slope", type=float, required=True)
    o.add_argument("--intercept", type=float, required=True)
    o.add_argument("--cq", type=float, help="seconds per gate; omit for a classical runtime fit")
    o.set_defaults(func=cmd_oneday)

    v = sub.add_parser("verify", help="check modules against independent oracles")
    v.add_argument("--suite", nargs="+", choices=[*oracles.SUITES, "all"], default=["all"])
    v.add_argument("--cases", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="convert records.jsonl to csv / jsonl / markdown")
    rp.add_argument("--records", required=True)
    rp.add_argument("--format", choices=("csv", "jsonl", "markdown"), default="csv")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)

    b = sub.add_parser("bounds", help="query bounds for one backtracking record (JSON)")
    b.add_argument("stats", help="JSON file with n, tree_size, num_solutions, first_solution_depth; '-' for stdin")
    b.add_argument("--delta", type=float, default=1e-3)
    b.add_argument("--resistance", type=float, help="resistance bound R (default n)")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (QsatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
