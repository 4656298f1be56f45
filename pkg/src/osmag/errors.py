"""Exception hierarchy for the osmag toolkit.

Every exception carries a short machine-readable ``code`` so the CLI can
print stable one-line diagnostics without string matching.
"""

from __future__ import annotations


class OsmagError(Exception):
    """Base class for all errors raised by this package."""

    code = "ERROR"

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = context

    def __str__(self) -> str:  # noqa: D105
        base = super().__str__()
        if self.context:
            extras = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
            return f"{base} ({extras})" if base else extras
        return base


# --- document reading -------------------------------------------------------

class XmlSyntaxError(OsmagError):
    code = "XML_SYNTAX"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class MissingAttributeError(OsmagError):
    code = "MISSING_ATTRIBUTE"


class InvalidAttributeError(OsmagError):
    code = "INVALID_ATTRIBUTE"


class NonNumericCoordinateError(OsmagError):
    code = "NON_NUMERIC_COORDINATE"


# --- model construction -----------------------------------------------------

class BuildError(OsmagError):
    """A document cannot be resolved into a map model."""

    code = "BUILD"


class MissingRootAnchorError(BuildError):
    code = "MISSING_ROOT"


class MultipleRootAnchorsError(BuildError):
    code = "MULTIPLE_ROOT"


class DuplicateNodeIdError(BuildError):
    code = "DUPLICATE_NODE_ID"


class DuplicateOsmagIdError(BuildError):
    code = "DUPLICATE_ID"


class MissingOsmagIdError(BuildError):
    code = "MISSING_ID"


class DanglingNodeReferenceError(BuildError):
    code = "DANGLING_NODE"


class DanglingAreaReferenceError(BuildError):
    code = "DANGLING_AREA"


class UnknownOsmagTypeError(BuildError):
    code = "UNKNOWN_TYPE"


class InvalidTagValueError(BuildError):
    code = "BAD_TAG_VALUE"


# --- model queries ----------------------------------------------------------

class UnknownAreaError(OsmagError):
    code = "UNKNOWN_AREA"


class NotInAnyAreaError(OsmagError):
    code = "NOT_IN_ANY_AREA"


# --- geometry ---------------------------------------------------------------

class DegeneratePolygonError(OsmagError):
    code = "DEGENERATE_POLYGON"


# --- rasterization ----------------------------------------------------------

class RasterError(OsmagError):
    code = "RASTER"

    #: set by callers that know which area was being rasterized
    area_id: str | None = None


class ResolutionTooCoarseError(RasterError):
    code = "RESOLUTION_TOO_COARSE"


class CellCapExceededError(RasterError):
    code = "CELL_CAP_EXCEEDED"


class UnreachableError(RasterError):
    code = "UNREACHABLE"


class NoFreeCellNearPassageError(RasterError):
    code = "NO_FREE_CELL_NEAR_PASSAGE"


# --- planning ---------------------------------------------------------------

class PlanError(OsmagError):
    code = "PLAN"


class StartNotLocatedError(PlanError):
    code = "START_NOT_LOCATED"


class GoalNotLocatedError(PlanError):
    code = "GOAL_NOT_LOCATED"


class NoPathError(PlanError):
    code = "NO_PATH"


# --- merging ----------------------------------------------------------------

class IncompatibleRootsError(OsmagError):
    code = "INCOMPATIBLE_ROOTS"


class ValidationFailedError(OsmagError):
    """The merged map does not validate. Carries the diagnostics."""

    code = "VALIDATION_FAILED"

    def __init__(self, message: str, diagnostics=None, report=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.report = report


# --- rendering --------------------------------------------------------------

class EmptySelectionError(OsmagError):
    code = "EMPTY_SELECTION"
