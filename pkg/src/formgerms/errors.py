"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class FormGermError(Exception):
    """Base class for all package errors."""


class BackendMismatchError(FormGermError, TypeError):
    """Operands carry different scalar backends (or different jet modes)."""


class OrderBudgetError(FormGermError):
    """A differentiation was requested from a jet with no order left."""

    def __init__(self, operation: str, order: int, needed: int = 1):
        self.operation = operation
        self.order = order
        self.needed = needed
        super().__init__(
            f"order budget exhausted in {operation}: have order {order}, need at least {needed}"
        )


class TranscendenceError(FormGermError, ValueError):
    """The exact backend would need an irrational value; use the float backend."""

    def __init__(self, message: str):
        super().__init__(f"{message} (requires float backend: pass backend='float')")


class SingularError(FormGermError, ZeroDivisionError):
    """Division by a jet or matrix whose value at the point vanishes."""


class DegenerateFormError(FormGermError):
    """The 2-form does not have rank 4 at the evaluation point."""

    def __init__(self, rank: int, message: str | None = None):
        self.rank = rank
        super().__init__(message or f"2-form is degenerate at the point (rank {rank})")


class FrameDegenerateError(FormGermError):
    """J vanishes or the frame (Z, T, U, V) is dependent at the point."""


class ParseError(FormGermError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} at line {line}, column {column}")


class UnknownIdentifierError(ParseError):
    pass


class UnboundParameterError(FormGermError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")

    def __str__(self) -> str:
        return self.args[0]
