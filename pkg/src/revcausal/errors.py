"""Exception and warning types shared across the package."""

from __future__ import annotations


class RevCausalError(Exception):
    """Base class for all package errors."""


class CycleError(RevCausalError, ValueError):
    pass


class UnknownNodeError(RevCausalError, KeyError):
    def __str__(self) -> str:
        # KeyError repr-quotes its message; keep it readable
        return str(self.args[0]) if self.args else ""


class DegenerateNoiseError(RevCausalError, ValueError):
    pass


class ParameterError(RevCausalError, ValueError):
    """Invalid scenario or strategy parameter. ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class DegenerateFocError(RevCausalError, ArithmeticError):
    """The first-order condition a = E_G(x|theta,a) has no unique solution."""

    def __init__(self, message: str, c2: float):
        super().__init__(message)
        self.c2 = c2


class NoConvergenceError(RevCausalError, RuntimeError):
    def __init__(self, message: str, last, trace: list[float]):
        super().__init__(message)
        self.last = last
        self.trace = trace


class SingularConditioningWarning(UserWarning):
    """Conditioning block is numerically singular; a pseudoinverse was used."""
