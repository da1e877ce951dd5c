"""Query-complexity upper bounds: walk-based detection, binary-search search with
tree-size doubling, and Grover search."""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .errors import InvalidDepthError, NoAmplificationError

_DPS = 50
C_LOWER = 1.0
C_UPPER = 1e6
C_TOL = 1e-6
GROVER_ALPHA = 9.2
GROVER_F_LARGE_T = 2.0344
_L_MAX = 10_001


@dataclass(frozen=True)
class DetectionConfig:
    delta: float
    C: float
    l: int

    @property
    def coefficient(self) -> float:
        return self.l * math.sqrt(self.C * (1 + self.C**2))


@dataclass(frozen=True)
class WalkBoundIntermediates:
    """Phase-estimation quantities at the optimum a = sqrt(b)."""

    a: float
    b: float
    Theta: float
    M: float
    precision_bits: int


@dataclass(frozen=True)
class DetectionQueries:
    smooth: float
    rounded: int
    precision_bits: int


@dataclass(frozen=True)
class GroverParams:
    delta: float = 1e-3
    n_samples: int = 0
    oracle_query_factor: float = 1.0
    alpha: float = GROVER_ALPHA

    def __post_init__(self):
        if self.alpha != GROVER_ALPHA:
            raise ValueError(f"alpha is fixed at {GROVER_ALPHA}")


def _majority_error_mp(C, l: int):
    C = mpmath.mpf(C)
    total = mpmath.mpf(0)
    power = mpmath.mpf(1)
    for i in range(l // 2 + 1):
        total += math.comb(l, i) * power
        power *= C
    return total / (1 + C) ** l


def majority_error(C: float, l: int) -> float:
    """Error of an l-fold majority vote over runs that succeed with odds C : 1."""
    if l < 1 or l % 2 == 0:
        raise ValueError(f"l must be odd and positive, got {l}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    with mpmath.workdps(_DPS):
        return float(_majority_error_mp(C, l))


def _solve_C(delta, l: int) -> float:
    lo, hi = mpmath.mpf(C_LOWER), mpmath.mpf(C_UPPER)
    while hi - lo > C_TOL:
        mid = (lo + hi) / 2
        if _majority_error_mp(mid, l) > delta:
            lo = mid
        else:
            hi = mid
    return float(hi)


def optimize_detection_config(delta: float) -> DetectionConfig:
    """Smallest l * sqrt(C (1 + C^2)) over odd l, with C solved from
    majority_error(C, l) = delta.

    Odd l are tried in increasing order and the search stops at the first l
    whose objective is larger than its predecessor's.
    """
    if not 0 < delta < 0.5:
        raise NoAmplificationError(f"majority voting cannot reach delta={delta}; need 0 < delta < 1/2")
    with mpmath.workdps(_DPS):
        target = mpmath.mpf(delta)
        best = None
        for l in range(1, _L_MAX, 2):
            C = _solve_C(target, l)
            cfg = DetectionConfig(float(delta), C, l)
            if best is not None and cfg.coefficient > best.coefficient:
                return best
            best = cfg
    return best


def walk_intermediates(config: DetectionConfig, R_bound: float, W: float) -> WalkBoundIntermediates:
    C = config.C
    growth = 1 + C * R_bound * W
    M = math.sqrt((1 + C**2) * growth)
    m = _ceil_log2(M)
    b = 1 / (4 * (1 + C**2))
    a = math.sqrt(b)
    return WalkBoundIntermediates(a, b, math.sqrt(4 * a / growth), M, m)


def _ceil_log2(x: float) -> int:
    """Exact ceil(log2 x) for x > 0 (no float log rounding at powers of two)."""
    mant, exp = math.frexp(x)  # x = mant * 2**exp, 0.5 <= mant < 1
    return exp - 1 if mant == 0.5 else exp


def detection_queries(config: DetectionConfig, R_bound: float, W: float) -> DetectionQueries:
    if not (R_bound > 0 and W > 0):
        raise ValueError(f"R_bound and W must be positive, got R={R_bound}, W={W}")
    C, l = config.C, config.l
    M = math.sqrt((1 + C**2) * (1 + C * R_bound * W))
    m = _ceil_log2(M)
    return DetectionQueries(l * (M - 1), l * (2**m - 1), m)


def _majority_failure(l: int, delta) -> mpmath.mpf:
    # at most floor(l/2) of l runs succeed, each run failing with probability delta
    q = 1 - delta
    return mpmath.fsum(math.comb(l, i) * q**i * delta ** (l - i) for i in range(l // 2 + 1))


def search_amplification(delta: float, n: int) -> int:
    """Smallest odd l' whose majority-vote failure over runs with error delta is
    at most 1 - (1 - delta)**(1/n), the per-step share of the total budget."""
    if not 0 < delta < 0.5:
        raise NoAmplificationError(f"majority voting cannot reach delta={delta}; need 0 < delta < 1/2")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    with mpmath.workdps(_DPS):
        d = mpmath.mpf(delta)
        budget = -mpmath.expm1(mpmath.log1p(-d) / n)
        slack = budget * mpmath.mpf(10) ** -30
        for l in range(1, _L_MAX, 2):
            if _majority_failure(l, d) <= budget + slack:
                return l
    raise NoAmplificationError(f"no l' below {_L_MAX} reaches the budget for n={n}")


def search_iterations(T: int) -> int:
    """Tree-size doubling rounds: ceil(log2 T), at least one."""
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    return max(1, (T - 1).bit_length())


def search_queries(
    delta: float,
    n: int,
    T: int,
    R_bound: float,
    depth: int | None,
    config: DetectionConfig | None = None,
) -> float:
    """Expected-case bound for finding a solution (or certifying none).

    ``depth`` is the first-solution depth d for satisfiable instances and None
    otherwise. Round i runs binary search with tree-size guess 2**i; every
    round but the last costs n detection runs, the last costs d of them when
    satisfiable (at least one) and a single run when unsatisfiable.
    """
    if depth is not None and not 0 <= depth <= n:
        raise InvalidDepthError(f"depth {depth} outside 0..{n}")
    config = config or cached_config(delta)
    rounds = search_iterations(T)
    last = 1 if depth is None else max(depth, 1)
    total = 0
    for i in range(1, rounds + 1):
        factor = last if i == rounds else n
        total += factor * detection_queries(config, R_bound, 2**i).rounded
    return float(search_amplification(delta, n) * total)


def _F(N: int, t: int) -> float:
    if 4 * t >= N:
        return GROVER_F_LARGE_T
    root = math.sqrt((N - t) * t)
    return 9 / 4 * N / root + math.ceil(math.log(N / (2 * root), 6 / 5)) - 3


def grover_expected_queries(params: GroverParams, N: int, t: int) -> float:
    """Expected queries of randomised Grover search over N items with t marked."""
    if not 0 <= t <= N:
        raise ValueError(f"need 0 <= t <= N, got t={t}, N={N}")
    cq = params.oracle_query_factor
    if t == 0:
        reps = _ceil_log(1 / params.delta, 3)
        return params.n_samples + params.alpha * cq * reps * math.sqrt(N)
    F = _F(N, t)
    ratio = F / (params.alpha * math.sqrt(N))
    if ratio >= 1:
        raise ValueError(f"Grover bound undefined for N={N}, t={t}")
    e_grover = F * (1 + 1 / (1 - ratio))
    miss = (1 - t / N) ** params.n_samples
    return N / t * (1 - miss) + miss * cq * e_grover


def _ceil_log(x: float, base: int) -> int:
    """ceil(log_base x), exact when x is a power of the base up to float noise."""
    r = math.log(x, base)
    k = round(r)
    return k if abs(r - k) < 1e-9 else math.ceil(r)


_CONFIGS: dict[float, DetectionConfig] = {}


def cached_config(delta: float) -> DetectionConfig:
    if delta not in _CONFIGS:
        _CONFIGS[delta] = optimize_detection_config(delta)
    return _CONFIGS[delta]
