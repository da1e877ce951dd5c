"""Random k-SAT instances (uniform and similarity-popularity) and DIMACS I/O."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import _kernels, rng
from .errors import DimacsError, InfeasibleClauseError, UnsupportedKError

# clauses-to-variables ratio at the satisfiability threshold
THRESHOLD_RATIOS = {
    3: 4.27,
    4: 9.93,
    5: 21.12,
    6: 43.27,
    7: 87.79,
    8: 176.54,
    9: 354.01,
    10: 708.92,
    11: 1418.71,
    12: 2838.28,
}

# stream tags for rng.stream_key
_CLAUSE_STREAM = 1
_VARIABLE_STREAM = 2

_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class FormulaMeta:
    k: int
    beta: float  # math.inf for the uniform model
    seed: int
    ratio: float


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[tuple[int, ...]]
    meta: FormulaMeta | None = None
    _arrays: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR view ``(offsets, literals)`` as int64 arrays; cached."""
        if self._arrays is None:
            offsets = np.zeros(len(self.clauses) + 1, dtype=np.int64)
            if self.clauses:
                offsets[1:] = np.cumsum([len(c) for c in self.clauses])
            lits = np.fromiter(
                (lit for c in self.clauses for lit in c), dtype=np.int64, count=int(offsets[-1])
            )
            self._arrays = (offsets, lits)
        return self._arrays


def clauses_for_threshold(n: int, k: int) -> int:
    """Clause count ``round(alpha_k * n)``, rounding halves up."""
    if k not in THRESHOLD_RATIOS:
        raise UnsupportedKError(f"no threshold ratio for k={k}; supported k are 3..12")
    exact = Decimal(str(THRESHOLD_RATIOS[k])) * n
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _check_shape(n: int, k: int, num_clauses: int) -> None:
    if k < 1 or n < 0 or num_clauses < 0:
        raise ValueError(f"invalid sizes n={n} k={k} m={num_clauses}")
    if num_clauses and k > n:
        raise InfeasibleClauseError(f"cannot pick {k} distinct variables out of {n}")


def _signed(chosen: np.ndarray, sign_u: np.ndarray) -> list[tuple[int, ...]]:
    lits = chosen + 1
    lits = np.where(sign_u < 0.5, -lits, lits)
    return [tuple(row) for row in lits.tolist()]


def sample_uniform_ksat(n: int, k: int, num_clauses: int, seed: int) -> CnfFormula:
    """Each clause: k distinct variables uniformly without replacement, in random
    order, each negated with probability 1/2."""
    _check_shape(n, k, num_clauses)
    key = rng.stream_key(seed, _CLAUSE_STREAM)
    clauses: list[tuple[int, ...]] = []
    if num_clauses:
        u = rng.uniforms(key, np.arange(num_clauses), n + k + 1)
        # the k smallest of n iid keys form a uniformly random ordered k-subset
        chosen = _first_k(u[:, :n], k)
        clauses = _signed(chosen, u[:, n : n + k])
    ratio = num_clauses / n if n else 0.0
    return CnfFormula(n, clauses, FormulaMeta(k, math.inf, seed, ratio))


def angular_distance(a, b):
    return np.pi - np.abs(np.pi - np.abs(a - b))


def inclusion_weights(index, distance, R: float, beta: float):
    """Probability-like weight of variable ``index`` (1-based) joining a clause at
    angular ``distance`` from it."""
    index = np.asarray(index, dtype=np.float64)
    return 1.0 / (1.0 + (index * np.asarray(distance) / R) ** (1.0 / beta))


def _first_k(keys: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest keys per row, in increasing key order."""
    n = keys.shape[1]
    part = np.argpartition(keys, k - 1, axis=1)[:, :k] if k < n else np.tile(np.arange(n), (keys.shape[0], 1))
    sel = np.take_along_axis(keys, part, axis=1)
    return np.take_along_axis(part, np.argsort(sel, axis=1, kind="stable"), axis=1)


def sample_powerlaw_ksat(n: int, k: int, num_clauses: int, beta: float, seed: int) -> CnfFormula:
    """Similarity-popularity model.

    Variables and clauses get uniform angles in [0, 2pi). For clause j the
    weight of variable i is ``1 / (1 + (i * d_ij / R)**(1/beta))`` with ``d_ij``
    the angular distance; R is solved per clause (safeguarded Newton in
    log R**(-1/beta), tolerance 1e-9 on the sum) so the weights sum to k.
    Exactly k distinct variables are then drawn by successive weighted sampling
    without replacement (Efraimidis-Spirakis keys ``log(U) / w``, which give the
    same ordered distribution). ``beta = inf`` is the uniform model.
    """
    if math.isinf(beta):
        return sample_uniform_ksat(n, k, num_clauses, seed)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    _check_shape(n, k, num_clauses)
    clauses: list[tuple[int, ...]] = []
    if num_clauses:
        var_theta = 2 * np.pi * rng.uniforms(rng.stream_key(seed, _VARIABLE_STREAM), [0], n)[0]
        u = rng.uniforms(rng.stream_key(seed, _CLAUSE_STREAM), np.arange(num_clauses), n + k + 1)
        clause_theta = 2 * np.pi * u[:, n + k]
        dist = angular_distance(var_theta[None, :], clause_theta[:, None])
        base = (np.arange(1, n + 1)[None, :] * dist) ** (1.0 / beta)
        if k < n:
            s = _kernels.solve_scale(base, float(k), _ROOT_TOL)
            w = 1.0 / (1.0 + base * s[:, None])
        else:
            w = np.ones_like(base)
        with np.errstate(divide="ignore"):
            keys = np.log(u[:, :n]) / w
        chosen = _first_k(-keys, k)
        clauses = _signed(chosen, u[:, n : n + k])
    ratio = num_clauses / n if n else 0.0
    return CnfFormula(n, clauses, FormulaMeta(k, float(beta), seed, ratio))


def generate(n: int, k: int, beta: float, seed: int, num_clauses: int | None = None) -> CnfFormula:
    """Instance at the threshold ratio unless ``num_clauses`` is given."""
    m = clauses_for_threshold(n, k) if num_clauses is None else num_clauses
    f = sample_powerlaw_ksat(n, k, m, beta, seed)
    if num_clauses is None:
        f.meta = FormulaMeta(k, f.meta.beta, seed, THRESHOLD_RATIOS[k])
    return f


def format_beta(beta: float) -> str:
    return "inf" if math.isinf(beta) else repr(float(beta))


def write_dimacs(formula: CnfFormula) -> str:
    out = []
    if formula.meta is not None:
        m = formula.meta
        out.append(f"c qsatbench k={m.k} beta={format_beta(m.beta)} seed={m.seed} ratio={m.ratio!r}\n")
    out.append(f"p cnf {formula.num_vars} {formula.num_clauses}\n")
    for clause in formula.clauses:
        out.append(" ".join(map(str, clause)) + " 0\n")
    return "".join(out)


def _parse_meta(line: str) -> FormulaMeta | None:
    fields = dict(tok.split("=", 1) for tok in line.split()[2:] if "=" in tok)
    try:
        return FormulaMeta(int(fields["k"]), float(fields["beta"]), int(fields["seed"]), float(fields["ratio"]))
    except (KeyError, ValueError):
        return None


def parse_dimacs(text: str) -> CnfFormula:
    header = None
    meta = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            if line.startswith("c qsatbench") and header is None:
                meta = _parse_meta(line)
            continue
        if line.startswith("%"):  # SATLIB end marker
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError("header", f"line {lineno}: {raw!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError("header", f"line {lineno}: {raw!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError("header", f"line {lineno}: negative size")
            continue
        if header is None:
            raise DimacsError("header", f"clause data before 'p cnf' header at line {lineno}")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError("header", f"line {lineno}: bad token {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > header[0]:
                raise DimacsError("literal-out-of-range", f"line {lineno}: literal {lit} with n={header[0]}")
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("header", "missing 'p cnf' header")
    if current:
        raise DimacsError("unterminated", f"last clause {current} lacks terminating 0")
    if len(clauses) != header[1]:
        raise DimacsError("header", f"header declares {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], clauses, meta)


def read_dimacs(path) -> CnfFormula:
    with open(path) as fh:
        return parse_dimacs(fh.read())


def save_dimacs(formula: CnfFormula, path) -> None:
    with open(path, "w") as fh:
        fh.write(write_dimacs(formula))
