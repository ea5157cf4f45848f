"""Exception hierarchy shared by the kernel, parser and checkers."""

from __future__ import annotations


class CspError(Exception):
    """Base class for every error raised by cspauto."""

    kind = "CspError"


class CspSyntaxError(CspError):
    kind = "SyntaxError"


class UnknownChannel(CspError):
    kind = "UnknownChannel"

    def __init__(self, channel: str, message: str | None = None):
        self.channel = channel
        super().__init__(message or f"unknown channel {channel!r}")


class ArityMismatch(CspError):
    kind = "ArityMismatch"


class DomainMismatch(ArityMismatch):
    """A component value lies outside the declared channel domain."""

    kind = "DomainMismatch"


class UnboundReference(CspError):
    kind = "UnboundReference"

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"reference to undefined process {name!r}")


class UnguardedRecursion(CspError):
    kind = "UnguardedRecursion"

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        shown = " -> ".join(self.cycle + self.cycle[:1])
        super().__init__(f"unguarded recursion: {shown}")


class FreeVariable(CspError):
    kind = "FreeVariable"


class TraceNotFound(CspError):
    kind = "TraceNotFound"


class SpecTruncated(CspError):
    kind = "SpecTruncated"


class LtsTruncated(CspError):
    """Raised where a partial state space cannot be used at all."""

    kind = "Truncated"


class EmptyRestriction(CspError):
    kind = "EmptyRestriction"


class ComponentOutOfRange(CspError):
    kind = "ComponentOutOfRange"


class TruncationWarning(UserWarning):
    """Result computed over a truncated Lts; treat it as a lower bound."""
