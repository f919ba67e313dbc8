"""
Error types shared by every lorlab module.

The CLI maps PreconditionError to exit code 2 and InconclusiveError to exit code 3.
"""

from typing import Any, Dict, Optional


class LorlabError(Exception):
    """Base class; `details` carries diagnostics for logs and manifests."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class PreconditionError(LorlabError, ValueError):
    """An input violates an operation's contract."""


class ChartMismatchError(PreconditionError):
    """Events were built for a different chart than the space descriptor."""


class TriangleTooLargeError(PreconditionError):
    """Side lengths cannot be realized on the comparison sphere of this curvature."""


class DomainError(PreconditionError):
    """A closed form was evaluated outside its domain (e.g. arccos argument > 1)."""


class InvalidCorrespondenceError(PreconditionError):
    """A relation between two nets does not project onto both of them."""


class ExhaustiveLimitError(PreconditionError):
    """Instance too large for exhaustive search; use the heuristic instead."""


class InconclusiveError(LorlabError, ArithmeticError):
    """A numerical trend could not be settled within the iteration cap."""
