"""Exception hierarchy.

Two families matter downstream: `InputError` means the caller handed us
something unusable (bad file, bad flag, out-of-range parameter), while
`InvariantViolation` means a certified bound failed and therefore the
implementation itself is buggy.  The CLI maps them to distinct exit codes.
"""


class RectiscopeError(Exception):
    """Base class for all package errors."""

    kind = "error"


class InputError(RectiscopeError):
    """The user supplied invalid data or parameters."""

    kind = "user-input"


class DepthError(InputError):
    """A cube query exceeded the depth the mass tree was built to."""


class RangeError(InputError):
    """A parameter fell outside its admissible range (e.g. the p gate)."""


class InvariantViolation(RectiscopeError):
    """A bound that the construction guarantees was measured false.

    This is never a data problem: it indicates an implementation bug and is
    surfaced with its own CLI exit code.
    """

    kind = "invariant"
