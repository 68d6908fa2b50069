"""
Exception hierarchy shared by the simulator, the scenario loader and the CLI.
"""

from typing import Optional, Sequence


class DceaError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(DceaError, ValueError):
    def __init__(self, what: str, expected: int, got: int):
        super().__init__(f"{what}: expected length {expected}, got {got}")
        self.what = what
        self.expected = expected
        self.got = got


class SingularJacobian(DceaError):
    def __init__(self, sigma_min: float, threshold: float, q: Optional[Sequence[float]] = None):
        q_txt = "" if q is None else f" at q={list(map(float, q))}"
        super().__init__(f"Jacobian singular: sigma_min={sigma_min:.3e} < {threshold:.1e}{q_txt}")
        self.sigma_min = sigma_min
        self.threshold = threshold
        self.q = None if q is None else [float(v) for v in q]


class NotRedundant(DceaError):
    def __init__(self, dof: int):
        super().__init__(f"operation requires a redundant arm (dof > 2), got dof={dof}")
        self.dof = dof


class NonpositiveMargin(DceaError):
    """Assumption A2 violated: some beta does not exceed the matching leader bound."""

    def __init__(self, index: int, beta: float, bound: float):
        super().__init__(
            f"beta_{index} = {beta} does not exceed the leader bound {bound} "
            f"(margin {beta - bound:.6g} <= 0)"
        )
        self.index = index
        self.beta = beta
        self.bound = bound


class NonfiniteState(DceaError):
    pass


class NonPositiveDefiniteInertia(DceaError):
    pass


class ScenarioError(DceaError):
    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        location = path or "<scenario>"
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")
        self.message = message
        self.path = path
        self.line = line
        self.column = column


class TraceSchemaError(DceaError):
    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class EmptyTraceError(DceaError):
    pass
