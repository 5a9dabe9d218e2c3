"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class LseError(Exception):
    """Base class; ``kind`` is the machine-readable tag the CLI reports."""

    kind = "error"


class ShapeError(LseError, ValueError):
    kind = "shape"


class RankDeficiencyError(LseError):
    """Raised when ``rank(B) = s`` or ``rank([A; B]) = n`` fails."""

    kind = "assumptions"

    def __init__(self, message: str, rank_B: int | None = None, rank_stacked: int | None = None):
        super().__init__(message)
        self.rank_B = rank_B
        self.rank_stacked = rank_stacked


class DomainError(LseError, ValueError):
    kind = "domain"


class StructureViolationError(LseError, ValueError):
    kind = "structure"


class OracleTooLargeError(LseError):
    kind = "oracle_too_large"


class GeneratorError(LseError):
    kind = "generator"
