"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpecError(ToolkitError, ValueError):
    """A problem specification is malformed or out of range."""


class InvalidInputError(ToolkitError, ValueError):
    """An operation received parameters outside its documented domain."""


class CapabilityError(ToolkitError):
    """The objective lacks a field required by the requested operation."""

    def __init__(self, missing, message=None):
        self.missing = missing
        super().__init__(message or f"objective does not provide '{missing}'")


class NumericalFailureError(ToolkitError):
    """A non-finite value or gradient appeared during iteration."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite value at iteration {iteration}")


class DeskScaleLimitError(ToolkitError, ValueError):
    """A requested size exceeds the built-in desk-scale limits."""


class InnerSolveError(ToolkitError):
    """The iterative prox sub-solver failed to reach its tolerance."""


class EmptyRegionError(ToolkitError):
    """Rejection sampling found no points in the requested region."""


class TraceParseError(ToolkitError, ValueError):
    """A persisted trace file is malformed."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
