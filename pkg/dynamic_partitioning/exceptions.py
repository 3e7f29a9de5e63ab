"""
Exceptions Module

Error hierarchy for the dynamic partitioning toolkit. Every error carries the
process exit code the command line interface reports for it.
"""

from typing import List, Optional


class PartitioningError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


# ==================== SCENARIO ERRORS ====================

class ScenarioError(PartitioningError):
    """Base class for problems with a scenario document."""

    exit_code = 2


class ScenarioParseError(ScenarioError):
    """
    Raised when a scenario file is not valid JSON.

    Attributes:
        path: The file that failed to parse
        line: 1-based line of the syntax error
        column: 1-based column of the syntax error
    """

    def __init__(self, path: str, line: int, column: int, message: str):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class ScenarioValidationError(ScenarioError):
    """
    Raised when a scenario violates one or more invariants.

    Attributes:
        errors: Every violated invariant, each prefixed by its JSON path
    """

    def __init__(self, errors: List[str], path: Optional[str] = None):
        self.errors = list(errors)
        self.path = path
        where = f"{path}: " if path else ""
        details = "\n  ".join(self.errors)
        super().__init__(f"{where}{len(self.errors)} validation error(s):\n  {details}")


class MalformedTraceError(PartitioningError):
    """Raised when an event trace cannot be replayed."""

    exit_code = 2


class UnsupportedPolicyError(PartitioningError):
    """Raised when an engine cannot run the requested policy variant."""

    exit_code = 2


# ==================== MODEL ERRORS ====================

class InvalidTemplateError(PartitioningError):
    """Raised for templates that do not fit their job type or cluster."""

    exit_code = 2


class SlotCollisionError(PartitioningError):
    """Raised when a template would reuse an occupied slot."""

    exit_code = 2

    def __init__(self, slots):
        self.slots = tuple(sorted(slots))
        super().__init__(f"slots already occupied: {list(self.slots)}")


class InvariantViolationError(PartitioningError):
    """Raised by checked runs when a state breaks a bookkeeping invariant."""

    def __init__(self, time: float, problems: List[str]):
        self.time = time
        self.problems = list(problems)
        super().__init__(f"t={time}: " + "; ".join(self.problems))


class UnknownTemplateError(PartitioningError):
    """Raised when a template id is not present in a configuration."""

    exit_code = 2

    def __init__(self, template_id):
        self.template_id = template_id
        super().__init__(f"unknown template: {template_id!r}")


# ==================== CAPACITY ERRORS ====================

class StateSpaceTooLargeError(PartitioningError):
    """
    Raised when an enumeration exceeds its state budget.

    Attributes:
        limit: The configured maximum number of states
        reached: How many states had been produced when enumeration stopped
    """

    exit_code = 3

    def __init__(self, limit: int, reached: int):
        self.limit = limit
        self.reached = reached
        super().__init__(
            f"state space exceeds max-states={limit} (reached {reached} before aborting)"
        )


class InfeasibleLoadError(PartitioningError):
    """Raised when a load vector lies outside the capacity region."""

    exit_code = 3


# ==================== NUMERICAL ERRORS ====================

class NumericalError(PartitioningError):
    """Base class for numerical failures."""

    exit_code = 4


class DomainError(NumericalError):
    """Raised when a function is evaluated outside its domain."""


class ReducibleChainError(NumericalError):
    """Raised when a generator is not irreducible."""


class SupportMismatchError(NumericalError):
    """Raised when two distributions cannot be compared."""
