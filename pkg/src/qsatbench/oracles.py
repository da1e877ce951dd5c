"""Independent brute-force and analytic oracles.

Nothing here imports the code it checks: the tree oracle has its own predicate
and ordering, the resistance oracle inverts a dense Laplacian, and the bound
oracles re-evaluate formulas term by term in high precision.
"""
from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import OracleLimitError, UndefinedResistanceError

MAX_COUNT_VARS = 24
MAX_TREE_VARS = 20
MAX_TREE_NODES = 10**7
MAX_DENSE_NODES = 500


@dataclass
class OracleReport:
    subject: str
    cases: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def check(self, case, expected, got, ok: bool) -> None:
        self.cases += 1
        if not ok:
            digest = hashlib.sha1(repr(case).encode()).hexdigest()[:12]
            self.mismatches.append((digest, expected, got))

    def line(self) -> str:
        status = "ok" if self.passed else f"{len(self.mismatches)} mismatches"
        return f"{self.subject}: {self.cases} cases, {status}"


# -- model counting ----------------------------------------------------------


def brute_force_count(formula) -> int:
    """Number of satisfying assignments by enumerating all 2^n of them."""
    n = formula.num_vars
    if n > MAX_COUNT_VARS:
        raise OracleLimitError(f"brute-force count limited to n <= {MAX_COUNT_VARS}, got {n}")
    x = np.arange(1 << n, dtype=np.uint32)
    ok = np.ones(1 << n, dtype=bool)
    for clause in formula.clauses:
        sat = np.zeros(1 << n, dtype=bool)
        for lit in clause:
            bit = (x >> np.uint32(abs(lit) - 1)) & np.uint32(1)
            sat |= bit.astype(bool) if lit > 0 else ~bit.astype(bool)
        ok &= sat
    return int(ok.sum())


# -- backtracking tree -------------------------------------------------------


@dataclass(frozen=True)
class TreeOracle:
    T: int
    d: int | None
    t: int


def _p_ordered(clauses, values):
    for clause in clauses:
        satisfied = False
        for lit in clause:
            v = values.get(abs(lit))
            if v is None:
                return "?"
            if v is (lit > 0):
                satisfied = True
                break
        if not satisfied:
            return "F"
    return "T"


def _p_clause(clauses, values):
    undecided = False
    for clause in clauses:
        vals = [values.get(abs(lit)) for lit in clause]
        if any(v is (lit > 0) for v, lit in zip(vals, clause)):
            continue
        if None in vals:
            undecided = True
        else:
            return "F"
    return "?" if undecided else "T"


def brute_force_tree(formula, predicate: str = "ordered", node_cap: int = MAX_TREE_NODES) -> TreeOracle:
    """Tree size, first-solution depth and model count of the backtracking
    tree, by plain recursion over dictionaries."""
    n = formula.num_vars
    if n > MAX_TREE_VARS:
        raise OracleLimitError(f"tree oracle limited to n <= {MAX_TREE_VARS}, got {n}")
    P = {"ordered": _p_ordered, "clause": _p_clause}[predicate]
    counts = Counter(abs(lit) for clause in formula.clauses for lit in clause)
    order = sorted(range(1, n + 1), key=lambda v: (-counts[v], v))
    clauses = [tuple(c) for c in formula.clauses]
    nodes = 0
    first = None
    models = 0

    def walk(values: dict, depth: int) -> None:
        nonlocal nodes, first, models
        nodes += 1
        if nodes > node_cap:
            raise OracleLimitError(f"tree oracle exceeded {node_cap} nodes")
        verdict = P(clauses, values)
        if verdict == "T":
            models += 2 ** (n - depth)
            if first is None:
                first = depth
        elif verdict == "?":
            var = order[depth]
            for value in (False, True):
                values[var] = value
                walk(values, depth + 1)
            del values[var]

    walk({}, 0)
    return TreeOracle(nodes, first, models)


# -- effective resistance ----------------------------------------------------


def resistance_dense(parent, marked) -> float:
    """Root-to-marked-set resistance of a unit-weight tree, marked nodes merged
    into one super-node, from the Laplacian pseudo-inverse."""
    marked = set(marked)
    if not marked:
        raise UndefinedResistanceError("effective resistance to an empty marked set")
    size = len(parent)
    if size > MAX_DENSE_NODES:
        raise OracleLimitError(f"dense resistance limited to {MAX_DENSE_NODES} nodes, got {size}")
    if 0 in marked:
        return 0.0
    # relabel: marked nodes -> 0, others -> 1..
    others = [v for v in range(size) if v not in marked]
    label = {v: 0 for v in marked}
    label.update({v: i + 1 for i, v in enumerate(others)})
    dim = len(others) + 1
    lap = np.zeros((dim, dim))
    for v in range(1, size):
        a, b = label[v], label[parent[v]]
        if a == b:
            continue
        lap[a, a] += 1
        lap[b, b] += 1
        lap[a, b] -= 1
        lap[b, a] -= 1
    pinv = np.linalg.pinv(lap)
    e = np.zeros(dim)
    e[label[0]] = 1
    e[0] = -1
    return float(e @ pinv @ e)


def random_tree(size: int, rng: np.random.Generator) -> list[int]:
    """Parent list of a random recursive tree (node 0 is the root)."""
    return [-1] + [int(rng.integers(0, v)) for v in range(1, size)]


def leaves(parent) -> list[int]:
    has_child = set(parent[1:])
    return [v for v in range(len(parent)) if v not in has_child]


def depth_of(parent, v: int) -> int:
    d = 0
    while parent[v] != -1:
        v = parent[v]
        d += 1
    return d


# -- first marked item -------------------------------------------------------


def expected_first_marked(N: int, t: int) -> float:
    """Mean index of the first marked item in a linear scan, t of N marked
    uniformly at random: (N + 1) / (t + 1)."""
    if not 1 <= t <= N:
        raise ValueError(f"need 1 <= t <= N, got t={t}, N={N}")
    return (N + 1) / (t + 1)


def first_marked_exact(N: int, t: int) -> Fraction:
    """Sum over i of i * P(first marked = i), with exact binomials."""
    if not 1 <= t <= N:
        raise ValueError(f"need 1 <= t <= N, got t={t}, N={N}")
    total = sum(i * math.comb(N - i, t - 1) for i in range(1, N + 1))
    return Fraction(total, math.comb(N, t))


def first_marked_monte_carlo(N: int, t: int, trials: int, seed: int = 0, chunk: int = 20_000):
    """Mean and standard error of the first marked index over random t-subsets.

    Subsets are drawn as i.i.d. index tuples, rejecting tuples with repeats.
    """
    gen = np.random.default_rng(seed)
    mins = []
    have = 0
    while have < trials:
        draw = gen.integers(1, N + 1, size=(chunk, t))
        draw.sort(axis=1)
        distinct = (np.diff(draw, axis=1) != 0).all(axis=1)
        got = draw[distinct, 0][: trials - have]
        mins.append(got)
        have += got.size
    values = np.concatenate(mins).astype(np.float64)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


# -- bound formulas ----------------------------------------------------------


def majority_error_exact(C: Fraction, l: int) -> Fraction:
    C = Fraction(C)
    return sum(math.comb(l, i) * C**i for i in range(l // 2 + 1)) / (1 + C) ** l


def amplification_exact(delta: Fraction, n: int, l_max: int = 501) -> int:
    """Smallest odd l' with majority-vote failure <= 1 - (1 - delta)^(1/n).

    Failure is an exact rational; the n-th root is compared by raising both
    sides to the n-th power: failure <= 1 - r  iff  (1 - failure)^n >= 1 - delta.
    """
    delta = Fraction(delta)
    for l in range(1, l_max, 2):
        fail = sum(math.comb(l, i) * (1 - delta) ** i * delta ** (l - i) for i in range(l // 2 + 1))
        if (1 - fail) ** n >= 1 - delta:
            return l
    raise OracleLimitError(f"no l' below {l_max}")


def search_bound_reference(C: float, l: int, l_prime: int, n: int, T: int, R: float, depth: int | None) -> mpmath.mpf:
    """Term-by-term evaluation of the search bound with mpmath."""
    with mpmath.workdps(40):
        rounds = 1
        while 2**rounds < T:
            rounds += 1
        total = mpmath.mpf(0)
        for i in range(1, rounds + 1):
            M = mpmath.sqrt((1 + mpmath.mpf(C) ** 2) * (1 + mpmath.mpf(C) * R * 2**i))
            m = int(mpmath.ceil(mpmath.log(M, 2)))
            if i < rounds:
                factor = n
            else:
                factor = 1 if depth is None else max(depth, 1)
            total += factor * l * (2**m - 1)
        return l_prime * total


def grover_reference(N: int, t: int, delta: float = 1e-3, n_samples: int = 0, cq: float = 1.0) -> mpmath.mpf:
    """High-precision evaluation of the QSearch expected-query formula."""
    alpha = mpmath.mpf("9.2")
    with mpmath.workdps(40):
        N_ = mpmath.mpf(N)
        if t == 0:
            reps = int(mpmath.ceil(mpmath.log(1 / mpmath.mpf(delta), 3) - mpmath.mpf(10) ** -20))
            return n_samples + alpha * cq * reps * mpmath.sqrt(N_)
        if 4 * t >= N:
            F = mpmath.mpf("2.0344")
        else:
            root = mpmath.sqrt((N_ - t) * t)
            F = mpmath.mpf(9) / 4 * N_ / root + mpmath.ceil(mpmath.log(N_ / (2 * root), mpmath.mpf(6) / 5)) - 3
        e_grover = F * (1 + 1 / (1 - F / (alpha * mpmath.sqrt(N_))))
        miss = (1 - mpmath.mpf(t) / N_) ** n_samples
        return N_ / t * (1 - miss) + miss * cq * e_grover


def crossover_numeric(s_c: float, i_c: float, s_q: float, i_q: float, c_q: float):
    """(n*, time) where 2^(s_c n + i_c) = c_q 2^(s_q n + i_q), by root finding in n."""
    from scipy.optimize import brentq

    def gap(n):
        return (s_c * n + i_c) - (math.log2(c_q) + s_q * n + i_q)

    lo, hi = -1.0, 1.0
    while gap(lo) * gap(hi) > 0:
        lo, hi = 2 * lo, 2 * hi
        if hi > 1e15:
            return None
    n_star = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return n_star, 2.0 ** (s_c * n_star + i_c)


def ols_reference(xs, ys) -> tuple[float, float]:
    """Slope and intercept from the 2x2 normal equations, in exact rationals."""
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    k = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    slope = (k * sxy - sx * sy) / (k * sxx - sx * sx)
    return float(slope), float((sy - slope * sx) / k)


# -- suites ------------------------------------------------------------------


def verify_backtracker(cases: int = 200, seed: int = 0, predicate: str = "ordered") -> list[OracleReport]:
    from .backtrack import explore_tree
    from .instances import generate

    gen = np.random.default_rng(seed)
    count = OracleReport("backtracker.num_solutions")
    tree = OracleReport("backtracker.tree")
    for _ in range(cases):
        k = int(gen.choice([3, 4, 5]))
        n = int(gen.integers(k, 13))
        s = int(gen.integers(0, 2**63))
        f = generate(n, k, math.inf, s)
        stats = explore_tree(f, predicate=predicate)
        want = brute_force_count(f)
        count.check((n, k, s), want, stats.num_solutions, want == stats.num_solutions)
        ref = brute_force_tree(f, predicate)
        got = (stats.tree_size, stats.first_solution_depth)
        tree.check((n, k, s), (ref.T, ref.d), got, got == (ref.T, ref.d))
    return [count, tree]


def verify_resistance(cases: int = 200, seed: int = 0) -> list[OracleReport]:
    from .backtrack import effective_resistance_exact

    gen = np.random.default_rng(seed)
    match = OracleReport("resistance.dense")
    bound = OracleReport("resistance.depth_bound")
    for _ in range(cases):
        size = int(gen.integers(2, 41))
        parent = random_tree(size, gen)
        pool = leaves(parent)
        marked = [int(v) for v in gen.choice(pool, size=int(gen.integers(1, len(pool) + 1)), replace=False)]
        want = resistance_dense(parent, marked)
        got = effective_resistance_exact(parent, marked)
        match.check((parent, marked), want, got, abs(want - got) <= 1e-9)
        deepest = max(depth_of(parent, v) for v in marked)
        bound.check((parent, marked), deepest, got, got <= deepest + 1e-12)
    return [match, bound]


def verify_bounds(cases: int = 200, seed: int = 0) -> list[OracleReport]:
    from . import bounds

    gen = np.random.default_rng(seed)
    maj = OracleReport("bounds.majority_error")
    amp = OracleReport("bounds.search_amplification")
    search = OracleReport("bounds.search_queries")
    for _ in range(cases):
        C = Fraction(int(gen.integers(1001, 10_000)), 1000)
        l = int(gen.integers(0, 30)) * 2 + 1
        want = float(majority_error_exact(C, l))
        got = bounds.majority_error(float(C), l)
        maj.check((C, l), want, got, math.isclose(want, got, rel_tol=1e-12))
    for n in range(1, 41):
        for delta in (Fraction(1, 10), Fraction(1, 100), Fraction(1, 1000)):
            want = amplification_exact(delta, n)
            got = bounds.search_amplification(float(delta), n)
            amp.check((delta, n), want, got, want == got)
    cfg = bounds.cached_config(1e-3)
    for _ in range(cases):
        n = int(gen.integers(1, 60))
        T = int(gen.integers(1, 2**30))
        depth = None if gen.random() < 0.5 else int(gen.integers(0, n + 1))
        want = float(search_bound_reference(cfg.C, cfg.l, bounds.search_amplification(1e-3, n), n, T, n, depth))
        got = bounds.search_queries(1e-3, n, T, n, depth)
        search.check((n, T, depth), want, got, math.isclose(want, got, rel_tol=1e-12))
    return [maj, amp, search]


def verify_grover(cases: int = 200, seed: int = 0) -> list[OracleReport]:
    from . import bounds

    gen = np.random.default_rng(seed)
    grover = OracleReport("bounds.grover_expected_queries")
    params = bounds.GroverParams()
    for _ in range(cases):
        n = int(gen.integers(4, 40))
        N = 2**n
        t = 0 if gen.random() < 0.2 else int(gen.integers(1, N + 1))
        want = float(grover_reference(N, t))
        got = bounds.grover_expected_queries(params, N, t)
        grover.check((N, t), want, got, math.isclose(want, got, rel_tol=1e-9))
    first = OracleReport("oracles.expected_first_marked")
    for N in range(1, 31):
        for t in range(1, N + 1):
            want = first_marked_exact(N, t)
            got = expected_first_marked(N, t)
            first.check((N, t), float(want), got, math.isclose(float(want), got, rel_tol=1e-12))
    return [grover, first]


SUITES = {
    "backtracker": verify_backtracker,
    "bounds": verify_bounds,
    "resistance": verify_resistance,
    "grover": verify_grover,
}


def run_suites(names, cases: int = 200, seed: int = 0) -> list[OracleReport]:
    if "all" in names:
        names = list(SUITES)
    reports: list[OracleReport] = []
    for name in names:
        reports.extend(SUITES[name](cases=cases, seed=seed))
    return reports
