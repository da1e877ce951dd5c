"""Median aggregation, log2-linear fits and best-algorithm grid colouring."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .costs import CostModelSpec, ScalingFit, largest_in_one_day, require
from .errors import EmptyGroupError, UnboundedError, UnderdeterminedFitError

ALGORITHMS = ("classical", "detection", "search", "grover")
QUANTUM = ("detection", "search", "grover")
FILTERS = ("sat", "unsat", "mixed")
METRICS = ("queries", "tdepth", "tcount", "runtime")
COLORS = {"classical": "blue", "detection": "red", "search": "green", "grover": "yellow"}


def record_value(record, algorithm: str, metric: str, cost: CostModelSpec | None = None) -> float:
    """The quantity fitted for one record.

    The classical column is always measured runtime. Quantum ``runtime`` is
    T-depth times the measurement time.
    """
    if algorithm == "classical":
        if record.classical_wall_time_s is None:
            raise EmptyGroupError("record has no classical runtime")
        return record.classical_wall_time_s
    if metric == "queries":
        return record.queries[algorithm]
    if metric in ("tdepth", "tcount"):
        return record.gates[f"{algorithm}.{metric}"]
    if metric == "runtime":
        c = (cost or CostModelSpec()).measurement_time_s
        return record.gates[f"{algorithm}.tdepth"] * c
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _keep(record, filter: str) -> bool:
    if filter == "mixed":
        return True
    if filter == "sat":
        return record.satisfiable
    if filter == "unsat":
        return not record.satisfiable
    raise ValueError(f"unknown filter {filter!r}; expected one of {FILTERS}")


def median(values) -> float:
    """Exact median; the mean of the central pair for even counts."""
    values = sorted(values)
    if not values:
        raise EmptyGroupError("median of an empty group")
    mid = len(values) // 2
    if len(values) % 2:
        return float(values[mid])
    return (values[mid - 1] + values[mid]) / 2


def median_by_size(records, algorithm: str, metric: str, filter: str = "mixed", cost=None) -> dict[int, float]:
    groups: dict[int, list[float]] = defaultdict(list)
    for r in records:
        if _keep(r, filter):
            groups[r.n].append(record_value(r, algorithm, metric, cost))
    if not groups:
        raise EmptyGroupError(f"no {filter} records")
    return {n: median(v) for n, v in sorted(groups.items())}


def fit_log2_linear(points: dict, metric: str = "queries", algorithm: str = "classical") -> ScalingFit:
    """Ordinary least squares of log2(value) against n."""
    ns = np.array(sorted(points), dtype=np.float64)
    if len(ns) < 2:
        raise UnderdeterminedFitError(f"need at least two distinct n, got {len(ns)}")
    ys = np.array([points[n] for n in sorted(points)], dtype=np.float64)
    if not (ys > 0).all():
        raise ValueError("fit values must be positive")
    A = np.column_stack([ns, np.ones_like(ns)])
    (slope, intercept), *_ = np.linalg.lstsq(A, np.log2(ys), rcond=None)
    return ScalingFit(float(slope), float(intercept), metric, algorithm)


def classify_scores(scores: dict[str, float]) -> str:
    """Colour from per-algorithm scores where lower is better.

    Classical wins if no quantum algorithm beats it; otherwise search if it
    beats both classical and Grover; otherwise Grover if it beats classical;
    otherwise detection.
    """
    c, s, g = scores["classical"], scores["search"], scores["grover"]
    if c <= min(scores["detection"], s, g):
        return COLORS["classical"]
    if s < c and s < g:
        return COLORS["search"]
    if g < c:
        return COLORS["grover"]
    return COLORS["detection"]


def classify_cell(fits: dict[str, ScalingFit]) -> str:
    return classify_scores({a: require(fits, a).slope for a in ALGORITHMS})


def one_day_sizes(fits: dict[str, ScalingFit], measurement_time_s: float) -> dict[str, float]:
    """Largest n solvable in a day; an algorithm whose cost does not grow gets inf."""
    sizes = {}
    for a in ALGORITHMS:
        fit = require(fits, a)
        try:
            sizes[a] = largest_in_one_day(fit, None if a == "classical" else measurement_time_s)
        except UnboundedError:
            sizes[a] = math.inf
    return sizes


def classify_one_day(fits: dict[str, ScalingFit], measurement_time_s: float) -> str:
    return classify_scores({a: -v for a, v in one_day_sizes(fits, measurement_time_s).items()})


@dataclass
class GridCell:
    k: int
    beta: float
    fits: dict[str, ScalingFit]
    color: str
    basis: str
    one_day: dict[str, float] | None = None


@dataclass
class GridReport:
    basis: str
    metric: str
    filter: str
    cells: list[GridCell] = field(default_factory=list)
    measurement_time_s: float | None = None

    def cell(self, k: int, beta: float) -> GridCell:
        for c in self.cells:
            if c.k == k and c.beta == beta:
                return c
        raise KeyError((k, beta))


def cell_fits(records, metric: str, filter: str, cost=None) -> dict[str, ScalingFit]:
    fits = {}
    for a in ALGORITHMS:
        m = "runtime" if a == "classical" else metric
        fits[a] = fit_log2_linear(median_by_size(records, a, m, filter, cost), m, a)
    return fits


def build_grid(records, basis: str = "scaling", metric: str = "tdepth", filter: str = "mixed", cost=None) -> GridReport:
    if basis not in ("scaling", "one_day"):
        raise ValueError(f"unknown basis {basis!r}")
    cost = cost or CostModelSpec()
    groups: dict[tuple, list] = defaultdict(list)
    for r in records:
        groups[(r.k, r.beta)].append(r)
    report = GridReport(basis, metric, filter, measurement_time_s=cost.measurement_time_s if basis == "one_day" else None)
    for (k, beta), rs in sorted(groups.items()):
        fits = cell_fits(rs, metric, filter, cost)
        if basis == "scaling":
            report.cells.append(GridCell(k, beta, fits, classify_cell(fits), basis))
        else:
            sizes = one_day_sizes(fits, cost.measurement_time_s)
            color = classify_scores({a: -v for a, v in sizes.items()})
            report.cells.append(GridCell(k, beta, fits, color, basis, sizes))
    return report


def grid_from_fits(table: dict[tuple, dict[str, ScalingFit]], basis: str = "scaling", measurement_time_s: float = 1e-6) -> GridReport:
    """Grid from fits given directly, e.g. ones read back from a CSV."""
    report = GridReport(basis, "given", "given", measurement_time_s=measurement_time_s if basis == "one_day" else None)
    for (k, beta), fits in sorted(table.items()):
        if basis == "scaling":
            report.cells.append(GridCell(k, beta, fits, classify_cell(fits), basis))
        else:
            sizes = one_day_sizes(fits, measurement_time_s)
            color = classify_scores({a: -v for a, v in sizes.items()})
            report.cells.append(GridCell(k, beta, fits, color, basis, sizes))
    return report
