"""Exception types raised across the toolkit."""


class QsatError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedKError(QsatError, ValueError):
    pass


class InfeasibleClauseError(QsatError, ValueError):
    pass


class DimacsError(QsatError, ValueError):
    """Malformed DIMACS input. ``kind`` is one of ``header``,
    ``literal-out-of-range`` or ``unterminated``."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class NodeBudgetExceeded(QsatError, RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"backtracking tree exceeds node budget of {budget}")
        self.budget = budget


class UndefinedResistanceError(QsatError, ValueError):
    pass


class NoAmplificationError(QsatError, ValueError):
    pass


class InvalidDepthError(QsatError, ValueError):
    pass


class UnboundedError(QsatError, ValueError):
    pass


class UnderdeterminedFitError(QsatError, ValueError):
    pass


class EmptyGroupError(QsatError, ValueError):
    pass


class MissingFitError(QsatError, KeyError):
    pass


class CostModelError(QsatError, ValueError):
    pass


class OracleLimitError(QsatError, ValueError):
    pass


class PlanError(QsatError, ValueError):
    pass


class UnreachableClassError(QsatError, RuntimeError):
    pass


class SolverNotFound(QsatError, FileNotFoundError):
    pass


class SolverTimeout(QsatError, TimeoutError):
    def __init__(self, timeout_s: float):
        super().__init__(f"solver exceeded {timeout_s} s")
        self.timeout_s = timeout_s


class SolverError(QsatError, RuntimeError):
    def __init__(self, returncode: int, stderr: str = ""):
        super().__init__(f"solver exited with code {returncode}: {stderr.strip()[:200]}")
        self.returncode = returncode
        self.stderr = stderr


class InconsistentResultError(QsatError, RuntimeError):
    """External solver and backtracker disagree on satisfiability."""
