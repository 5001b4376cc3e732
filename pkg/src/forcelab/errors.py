"""Exception types shared across the package."""

from __future__ import annotations


class LabError(Exception):
    """Base class for every error raised by the package."""


class InputError(LabError, ValueError):
    """Rejected input: malformed values, length mismatches, bad files."""


class PreconditionError(InputError):
    """A stated precondition failed; ``clause`` names which one."""

    def __init__(self, clause: str, message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause


class InapplicableError(InputError):
    """Operation does not apply to this configuration."""


class IncompatibilityRisk(InputError):
    """Two conditions do not meet the demands needed to amalgamate them."""


class CapacityError(LabError):
    """Not enough room (dimension, depth or length) to do what was asked."""


class BudgetExceeded(LabError):
    """A bounded search ran out of its inspection budget."""


class InternalInconsistency(LabError):
    """Something guaranteed by the theory did not happen. Never expected."""


class TheoremViolation(InternalInconsistency):
    """Alarm raised when a constructed object fails a check it must pass."""


class ModelInconsistency(LabError):
    """The background model cannot supply the requested witness."""


__all__ = [
    "LabError",
    "InputError",
    "PreconditionError",
    "InapplicableError",
    "IncompatibilityRisk",
    "CapacityError",
    "BudgetExceeded",
    "InternalInconsistency",
    "TheoremViolation",
    "ModelInconsistency",
]
