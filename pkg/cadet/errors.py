"""
cadet error hierarchy.

Every failure the library can report is a subclass of CadetError. Each
class keeps the context it was raised with (file, row, line) as
attributes so callers can inspect it, and renders that context into the
message so the CLI can print it verbatim.

Exit codes follow the CLI contract: 1 is reserved for usage errors,
2 for anything wrong with the data, a model file or a config file.
"""

from __future__ import annotations

from typing import Optional


class CadetError(Exception):
    """Base class for all cadet errors."""

    exit_code: int = 2

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        row: Optional[int] = None,
        line: Optional[int] = None,
    ):
        self.message = message
        self.path = path
        self.row = row
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        where = []
        if self.path:
            where.append(str(self.path))
        if self.row is not None:
            where.append(f"row {self.row}")
        if self.line is not None:
            where.append(f"line {self.line}")
        if where:
            return f"{', '.join(where)}: {self.message}"
        return self.message


class UsageError(CadetError):
    """Bad command-line usage."""

    exit_code = 1


class ConfigError(CadetError):
    """Invalid configuration value or config file."""


class CadetIOError(CadetError):
    """A file could not be written or read."""


# ---------- dataset ----------


class SchemaError(CadetError):
    """Missing/unknown column, or a vector that does not fit the schema."""


class ParseError(CadetError):
    """A CSV cell could not be parsed (row numbers are 1-based data rows)."""


class DegenerateSplit(CadetError):
    """A patient-level split left one of its parts without patients."""


class EmptyDataset(CadetError):
    """An operation that needs examples received none."""


# ---------- svm ----------


class DimensionMismatch(CadetError):
    """Vectors of different lengths were combined."""


class SingleClassData(CadetError):
    """Training data contains only one decision value."""


class InfeasibleAlphas(CadetError):
    """Dual coefficients violate the box or equality constraint."""


class SolverInvariantError(CadetError):
    """Debug-mode check: the dual objective decreased on an accepted update."""


# ---------- detector ----------


class FormatError(CadetError):
    """Malformed model file."""


class EmptyCalibrationSet(CadetError):
    """Calibration received no scores."""


# ---------- baseline ----------


class UnknownFeature(CadetError):
    """A rule references a feature name absent from the schema."""


class RuleSyntaxError(CadetError):
    """A rule file line does not follow the IF ... THEN / DEFAULT grammar."""


# ---------- evaluation ----------


class LengthMismatch(CadetError):
    """Paired lists of different lengths."""


class SingleClassExpected(CadetError):
    """ROC needs at least one expected anomaly and one expected normal."""


class MismatchedEvalSets(CadetError):
    """Two reports were computed over different evaluation items."""
