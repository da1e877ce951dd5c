"""Query counts to T-depth / T-count and seconds; crossover times and one-day
capacity."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import CostModelError, MissingFitError, UnboundedError

ONE_DAY_S = 86400.0
ORACLE_KINDS = ("P", "h", "diffusion")
METRICS = ("tdepth", "tcount")
# oracle kinds each quantum algorithm pays for per query
ALGORITHM_KINDS = {
    "detection": ("P", "h", "diffusion"),
    "search": ("P", "h", "diffusion"),
    "grover": ("P", "diffusion"),
}

# Placeholder per-query costs, a0 + a1*n + a2*m for n variables and m clauses.
# They are not derived from real circuits; replace them with a profile file.
DEFAULT_TDEPTH = {"P": (4.0, 0.0, 1.0), "h": (4.0, 1.0, 0.0), "diffusion": (1.0, 1.0, 0.0)}
DEFAULT_TCOUNT = {"P": (0.0, 0.0, 28.0), "h": (0.0, 28.0, 0.0), "diffusion": (0.0, 14.0, 0.0)}
DEFAULT_MEASUREMENT_TIME_S = 1e-6


@dataclass
class CostModelSpec:
    per_query_tdepth: dict[str, tuple[float, float, float]] = field(default_factory=lambda: dict(DEFAULT_TDEPTH))
    per_query_tcount: dict[str, tuple[float, float, float]] = field(default_factory=lambda: dict(DEFAULT_TCOUNT))
    measurement_time_s: float = DEFAULT_MEASUREMENT_TIME_S

    def __post_init__(self):
        if not (math.isfinite(self.measurement_time_s) and self.measurement_time_s > 0):
            raise CostModelError(f"measurement_time_s must be positive, got {self.measurement_time_s}")
        for metric in METRICS:
            table = self.coefficients(metric)
            for kind, coeffs in table.items():
                if kind not in ORACLE_KINDS:
                    raise CostModelError(f"unknown oracle kind {kind!r} in {metric}; expected {ORACLE_KINDS}")
                coeffs = tuple(float(a) for a in coeffs)
                if len(coeffs) != 3 or not all(math.isfinite(a) for a in coeffs):
                    raise CostModelError(f"{metric}.{kind} needs three finite coefficients, got {coeffs}")
                table[kind] = coeffs

    def coefficients(self, metric: str) -> dict[str, tuple[float, float, float]]:
        if metric == "tdepth":
            return self.per_query_tdepth
        if metric == "tcount":
            return self.per_query_tcount
        raise CostModelError(f"unknown gate metric {metric!r}; expected one of {METRICS}")

    def per_query(self, n: int, num_clauses: int, metric: str, kinds=ORACLE_KINDS) -> float:
        table = self.coefficients(metric)
        missing = [k for k in kinds if k not in table]
        if missing:
            raise CostModelError(f"no {metric} coefficients for {missing}")
        return sum(a0 + a1 * n + a2 * num_clauses for a0, a1, a2 in (table[k] for k in kinds))


def load_cost_profile(path) -> CostModelSpec:
    """Read a TOML profile::

        measurement_time_s = 1e-6
        [costs.tdepth]
        P = [4, 0, 1]
        h = [4, 1, 0]
        diffusion = [1, 1, 0]
        [costs.tcount]
        ...

    Tables that are absent keep the placeholder defaults.
    """
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise CostModelError(f"{path}: {exc}") from None
    return cost_profile_from_dict(data)


def cost_profile_from_dict(data: dict) -> CostModelSpec:
    unknown = set(data) - {"costs", "measurement_time_s"}
    if unknown:
        raise CostModelError(f"unknown profile keys {sorted(unknown)}")
    costs = data.get("costs", {})
    bad = set(costs) - set(METRICS)
    if bad:
        raise CostModelError(f"unknown cost metrics {sorted(bad)}")
    try:
        return CostModelSpec(
            per_query_tdepth={k: tuple(v) for k, v in costs.get("tdepth", DEFAULT_TDEPTH).items()},
            per_query_tcount={k: tuple(v) for k, v in costs.get("tcount", DEFAULT_TCOUNT).items()},
            measurement_time_s=float(data.get("measurement_time_s", DEFAULT_MEASUREMENT_TIME_S)),
        )
    except (TypeError, ValueError) as exc:
        raise CostModelError(str(exc)) from None


def dump_cost_profile(spec: CostModelSpec) -> str:
    lines = [f"measurement_time_s = {spec.measurement_time_s!r}", ""]
    for metric in METRICS:
        lines.append(f"[costs.{metric}]")
        for kind, coeffs in spec.coefficients(metric).items():
            lines.append(f"{kind} = [{', '.join(repr(float(a)) for a in coeffs)}]")
        lines.append("")
    return "\n".join(lines)


def queries_to_gates(
    queries: float, n: int, num_clauses: int, spec: CostModelSpec, metric: str, kinds=ORACLE_KINDS
) -> float:
    return queries * spec.per_query(n, num_clauses, metric, kinds)


def runtime_seconds(gates: float, measurement_time_s: float) -> float:
    return gates * measurement_time_s


@dataclass(frozen=True)
class ScalingFit:
    """Cost model 2**(slope * n + intercept)."""

    slope: float
    intercept: float
    metric: str = "queries"
    algorithm: str = "classical"

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ValueError(f"non-finite fit {self.slope}, {self.intercept}")

    def log2_value(self, n: float) -> float:
        return self.slope * n + self.intercept

    def label(self) -> str:
        return f"{self.slope:.3f}n{self.intercept:+.2f}"


@dataclass(frozen=True)
class Crossover:
    time_s: float
    n_star: float


def crossover_time(classical: ScalingFit, quantum: ScalingFit, measurement_time_s: float) -> Crossover | None:
    """Time at which 2^(s_c n + i_c) = c_q 2^(s_q n + i_q), or None when the
    quantum curve never catches up (s_c <= s_q)."""
    s_c, i_c = classical.slope, classical.intercept
    s_q, i_q = quantum.slope, quantum.intercept
    if s_c <= s_q:
        return None
    gap = s_c - s_q
    log_cq = math.log2(measurement_time_s)
    n_star = (log_cq + i_q - i_c) / gap
    log_t = (s_q / gap + 1) * log_cq + s_q * (i_q - i_c) / gap + i_q
    return Crossover(2.0**log_t, n_star)


def largest_in_one_day(fit: ScalingFit, measurement_time_s: float | None = None, budget_s: float = ONE_DAY_S) -> float:
    """Real n with c * 2^(s n + i) = budget; c is 1 for classical runtime fits."""
    if fit.slope <= 0:
        raise UnboundedError(f"slope {fit.slope} <= 0: every size fits in the budget")
    c = 1.0 if measurement_time_s is None else measurement_time_s
    return (math.log2(budget_s / c) - fit.intercept) / fit.slope


def require(fits: dict, algorithm: str) -> ScalingFit:
    try:
        return fits[algorithm]
    except KeyError:
        raise MissingFitError(algorithm) from None
