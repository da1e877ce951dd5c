"""Classical backtracking: predicate P, static heuristic h, tree statistics and
effective resistance of the explored tree."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import NodeBudgetExceeded, UndefinedResistanceError
from .instances import CnfFormula

DEFAULT_NODE_BUDGET = 10**8
EXPLICIT_TREE_LIMIT = 10**5
# assignment lookup tables: at most 2**25 bytes and about 2**27 writes to build
TABLE_MAX_VARS = 24
TABLE_MAX_WORK = 2**27

# "ordered": scan literals in order, the first unassigned literal met makes P
# indeterminate. "clause": False iff some clause is falsified, True iff every
# clause is satisfied.
PREDICATES = ("ordered", "clause")


class Verdict(Enum):
    FALSE = _kernels.FALSE
    TRUE = _kernels.TRUE
    INDETERMINATE = _kernels.INDETERMINATE


def _check_predicate(predicate: str) -> None:
    if predicate not in PREDICATES:
        raise ValueError(f"unknown predicate {predicate!r}; choose from {PREDICATES}")


def evaluate_predicate(formula: CnfFormula, assignment, predicate: str = "ordered") -> Verdict:
    """P on a partial assignment (sequence of True/False/None, index 0 is x1).

    With the default ``"ordered"`` predicate clauses and literals are scanned
    in stored order and the first unassigned literal met makes the whole
    predicate indeterminate, even when a later literal of the same clause is
    satisfied.
    """
    if len(assignment) != formula.num_vars:
        raise ValueError(f"assignment has length {len(assignment)}, formula has {formula.num_vars} variables")
    _check_predicate(predicate)
    if predicate == "clause":
        return _clause_predicate(formula, assignment)
    for clause in formula.clauses:
        for lit in clause:
            value = assignment[abs(lit) - 1]
            if value is None:
                return Verdict.INDETERMINATE
            if value == (lit > 0):
                break
        else:
            return Verdict.FALSE
    return Verdict.TRUE


def _clause_predicate(formula: CnfFormula, assignment) -> Verdict:
    open_clause = False
    for clause in formula.clauses:
        values = [assignment[abs(lit) - 1] for lit in clause]
        if any(v is not None and v == (lit > 0) for v, lit in zip(values, clause)):
            continue
        if all(v is not None for v in values):
            return Verdict.FALSE
        open_clause = True
    return Verdict.INDETERMINATE if open_clause else Verdict.TRUE


def variable_order(formula: CnfFormula) -> list[int]:
    """Variables (1-based) by occurrence count, most frequent first; ties by index.

    Repeated literals inside a clause count once per appearance.
    """
    counts = np.zeros(formula.num_vars + 1, dtype=np.int64)
    _, lits = formula.arrays()
    np.add.at(counts, np.abs(lits), 1)
    idx = np.arange(1, formula.num_vars + 1)
    # lexsort: last key is primary
    return idx[np.lexsort((idx, -counts[1:]))].tolist()


@dataclass
class BacktrackStats:
    tree_size: int
    num_solutions: int
    first_solution_depth: int | None
    num_vars: int
    solution_depths: np.ndarray = field(repr=False)

    @property
    def satisfiable(self) -> bool:
        return self.num_solutions > 0

    @property
    def solution_leaves(self) -> list[tuple[int, int]]:
        """(assigned-prefix length, unassigned count) for each True leaf, in visit order."""
        return [(int(d), self.num_vars - int(d)) for d in self.solution_depths]

    def summary(self) -> dict:
        return {
            "tree_size": self.tree_size,
            "num_solutions": self.num_solutions,
            "first_solution_depth": self.first_solution_depth,
            "satisfiable": self.satisfiable,
        }


def _stats_from_depths(tree_size: int, n: int, depths) -> BacktrackStats:
    depths = np.asarray(depths, dtype=np.int32)
    count = sum(1 << (n - int(d)) for d in depths)
    first = int(depths[0]) if depths.size else None
    return BacktrackStats(tree_size, count, first, n, depths)


def _use_table(formula: CnfFormula) -> bool:
    n = formula.num_vars
    if n == 0 or n > TABLE_MAX_VARS or not formula.clauses:
        return False
    shortest = min(len(c) for c in formula.clauses)
    return formula.num_clauses * 2 ** max(n - shortest, 0) <= TABLE_MAX_WORK


def _clause_buckets(formula: CnfFormula, position: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clauses grouped by the position (in the variable order) of their last
    variable, as CSR ``(offsets, clause indices)``."""
    n = formula.num_vars
    offsets, lits = formula.arrays()
    sizes = np.diff(offsets)
    nonempty = np.flatnonzero(sizes)
    last = np.zeros(len(sizes), dtype=np.int64)
    if lits.size:
        pos = position[np.abs(lits) - 1]
        last[nonempty] = np.maximum.reduceat(pos, offsets[nonempty])
    clauses = nonempty[np.argsort(last[nonempty], kind="stable")]
    counts = np.bincount(last[nonempty], minlength=n)
    bucket_offsets = np.zeros(n + 1, dtype=np.int64)
    bucket_offsets[1:] = np.cumsum(counts)
    return bucket_offsets, clauses.astype(np.int64)


def explore_tree(
    formula: CnfFormula, node_budget: int = DEFAULT_NODE_BUDGET, predicate: str = "ordered"
) -> BacktrackStats:
    """Exhaustive depth-first exploration (false child first) of the tree
    defined by P and the static variable order."""
    _check_predicate(predicate)
    n = formula.num_vars
    offsets, lits = formula.arrays()
    order = np.asarray(variable_order(formula), dtype=np.int64) - 1
    if n == 0:
        order = np.zeros(0, dtype=np.int64)
    position = np.empty(n, dtype=np.int64)
    position[order] = np.arange(n)
    if predicate == "clause":
        buckets = _clause_buckets(formula, position)
        table = np.zeros(0, dtype=np.uint8)
        if _use_table(formula):
            table = _kernels.bucket_tables(offsets, lits, n, position, *buckets)
        masks = (np.zeros(0, dtype=np.int64),) * 2
        if n <= 62:
            masks = _kernels.clause_masks(offsets, lits, position)
        status, tree, depths = _kernels.explore_clausewise(
            offsets, lits, n, order, node_budget, *buckets, table, *masks
        )
        if status == _kernels.BUDGET_EXCEEDED:
            raise NodeBudgetExceeded(node_budget)
        return _stats_from_depths(int(tree), n, depths)
    table = np.zeros(0, dtype=np.uint8)
    if _use_table(formula):
        table = _kernels.falsified_table(offsets, lits, n, position)
    status, tree, depths = _kernels.explore(offsets, lits, n, order, node_budget, table)
    if status == _kernels.BUDGET_EXCEEDED:
        raise NodeBudgetExceeded(node_budget)
    return _stats_from_depths(int(tree), n, depths)


@dataclass
class ExplicitTree:
    """Materialised backtracking tree. Node 0 is the root; ``parent[0] == -1``."""

    parent: list[int]
    depth: list[int]
    verdict: list[Verdict]
    num_vars: int

    @property
    def size(self) -> int:
        return len(self.parent)

    def true_leaves(self) -> list[int]:
        return [i for i, v in enumerate(self.verdict) if v is Verdict.TRUE]

    def stats(self) -> BacktrackStats:
        return _stats_from_depths(self.size, self.num_vars, [self.depth[i] for i in self.true_leaves()])


def build_tree(
    formula: CnfFormula, max_nodes: int = EXPLICIT_TREE_LIMIT, predicate: str = "ordered"
) -> ExplicitTree:
    """Same exploration as :func:`explore_tree`, keeping every node.

    Evaluates P from scratch at every node, so it doubles as a check on the
    incremental scan used by the compiled explorer.
    """
    order = variable_order(formula)
    assignment: list[bool | None] = [None] * formula.num_vars
    parent: list[int] = []
    depth: list[int] = []
    verdict: list[Verdict] = []

    def visit(par: int, d: int) -> None:
        if len(parent) >= max_nodes:
            raise NodeBudgetExceeded(max_nodes)
        node = len(parent)
        v = evaluate_predicate(formula, assignment, predicate)
        parent.append(par)
        depth.append(d)
        verdict.append(v)
        if v is Verdict.INDETERMINATE:
            var = order[d] - 1
            for value in (False, True):
                assignment[var] = value
                visit(node, d + 1)
            assignment[var] = None

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, formula.num_vars + 100))
    try:
        visit(-1, 0)
    finally:
        sys.setrecursionlimit(limit)
    return ExplicitTree(parent, depth, verdict, formula.num_vars)


def effective_resistance_exact(parent, marked) -> float:
    """Effective resistance between the root (node 0) and the marked set of a
    tree with unit edges.

    Branches without a marked node are dropped (no current flows there), chains
    of degree-2 nodes become single edges of resistance equal to their length,
    and the remaining Laplacian system is solved with the marked nodes grounded.
    """
    marked = set(marked)
    if not marked:
        raise UndefinedResistanceError("effective resistance to an empty marked set")
    if 0 in marked:
        return 0.0
    size = len(parent)
    children: list[list[int]] = [[] for _ in range(size)]
    for v in range(1, size):
        children[parent[v]].append(v)

    # keep nodes with a marked node in their subtree; stop below marked nodes
    keep = [False] * size
    for v in marked:
        while v != -1 and not keep[v]:
            keep[v] = True
            v = parent[v]

    # contracted graph: vertices are the root, marked nodes and branch points
    def is_vertex(v: int) -> bool:
        if v == 0 or v in marked:
            return True
        return sum(keep[c] for c in children[v]) != 1

    index = {0: 0}
    edges: list[tuple[int, int, float]] = []
    stack = [0]
    while stack:
        top = stack.pop()
        if top in marked:
            continue
        for c in children[top]:
            if not keep[c]:
                continue
            length = 1
            v = c
            while not is_vertex(v):
                v = next(x for x in children[v] if keep[x])
                length += 1
            if v not in index:
                index[v] = len(index)
                stack.append(v)
            edges.append((index[top], index[v], float(length)))

    size_c = len(index)
    lap = np.zeros((size_c, size_c))
    for a, b, r in edges:
        g = 1.0 / r
        lap[a, a] += g
        lap[b, b] += g
        lap[a, b] -= g
        lap[b, a] -= g
    ground = {index[v] for v in marked if v in index}
    free = [i for i in range(size_c) if i not in ground]
    rhs = np.zeros(len(free))
    rhs[free.index(0)] = 1.0
    potential = np.linalg.solve(lap[np.ix_(free, free)], rhs)
    return float(potential[free.index(0)])


def tree_resistance(tree: ExplicitTree) -> float:
    return effective_resistance_exact(tree.parent, tree.true_leaves())


_warm = False


def warm_up() -> None:
    """Load the compiled explorers once so the first timed call does not pay for it."""
    global _warm
    if not _warm:
        tiny = CnfFormula(2, [(1, 2), (-1, 2)])
        for predicate in PREDICATES:
            explore_tree(tiny, predicate=predicate)
        _warm = True
