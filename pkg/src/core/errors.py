"""Exception hierarchy shared by the solvers, the oracle and the CLI."""

from typing import List, Optional, Tuple


class EpswError(Exception):
    """Base class for every error raised by epswcore."""


class StructureError(EpswError):
    """Malformed input structure (empty, overlapping or unordered pieces)."""


class DomainError(EpswError):
    """Argument outside the domain of a function."""


class ParameterError(EpswError):
    """Parameter outside its admissible range."""


class NormalizationError(EpswError):
    """Density does not integrate to one."""

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


class BracketError(EpswError):
    """Root is not bracketed by the given interval."""

    def __init__(self, message: str, lo: float, hi: float, f_lo: float, f_hi: float):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.f_lo = f_lo
        self.f_hi = f_hi


class ConvergenceError(EpswError):
    """Iteration cap reached before the tolerance was met."""

    def __init__(self, message: str, bracket: Tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


class FeasibilityError(EpswError):
    """Hiring shares exceed the available supply on some interval."""

    def __init__(self, message: str, group: str, interval: Tuple[float, float], total: float):
        super().__init__(message)
        self.group = group
        self.interval = interval
        self.total = total


class NoCoreError(EpswError):
    """No core outcome exists for the requested wage schedule."""


class NotCoreError(EpswError):
    """The requested configuration is not part of any core outcome."""

    def __init__(self, message: str, deviation: Optional[str] = None):
        super().__init__(message)
        self.deviation = deviation or message


class InfeasibleDeltaError(EpswError):
    """No partner threshold balances profits for the given cap."""


class InfeasibleVbarError(EpswError):
    """No B-group flattening point offsets the A-group wage reduction."""


class ResolutionError(EpswError):
    """Grid refinement still moves the result by more than the threshold."""

    def __init__(self, message: str, suggested_grid: int):
        super().__init__(message)
        self.suggested_grid = suggested_grid


class InapplicableError(EpswError):
    """Operation does not apply to the given market."""


class ScenarioError(EpswError):
    """Scenario file failed validation; carries every diagnostic."""

    def __init__(self, diagnostics: List[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics
