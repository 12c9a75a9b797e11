"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad user-supplied data or configuration (CLI exit code 1)."""


class FormatError(InputError):
    """A file could not be parsed or has the wrong container header."""


class InternalError(RuntimeError):
    """Violated internal precondition (CLI exit code 2)."""
