"""Exception hierarchy shared by every SELENE module."""

from __future__ import annotations


class SeleneError(Exception):
    """Base class for all errors raised by this package."""


class LatticeError(SeleneError):
    """Unknown level, or a declared order that is not a lattice."""


class ParseError(SeleneError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class DeclarationError(SeleneError):
    """A declaration parsed fine but its type is ill-formed."""

    def __init__(self, message: str, name: str, line: int = 0, col: int = 0):
        self.name = name
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class FormatError(SeleneError):
    """Malformed JSON input (input environment, trace, memory, experiment)."""


class VariationError(SeleneError):
    """An NI variant is not equivalent to the base configuration."""

    def __init__(self, message: str, clause: str):
        self.clause = clause
        super().__init__(f"{clause}: {message}")
