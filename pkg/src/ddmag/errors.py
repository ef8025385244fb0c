"""Exception hierarchy shared by all ddmag modules.

Every error carries a short machine-readable category slug so the command
line front end can map failures onto distinct exit codes.
"""


class DDMagError(Exception):
    """Base class for all package errors."""

    category = "error"


class InvalidArgumentError(DDMagError, ValueError):
    """A value violates an operation precondition or a type invariant."""

    category = "invalid-argument"


class InvalidTimingError(DDMagError, ValueError):
    """Pulse timing is inconsistent (overlap, zero spacing, out of range)."""

    category = "invalid-timing"


class ResourceLimitError(DDMagError):
    """A requested construction exceeds a configured size cap."""

    category = "resource-limit"


class NoSignalError(DDMagError):
    """A curve shows no detectable oscillation above its noise floor."""

    category = "no-signal"


class FitFailureError(DDMagError):
    """Least-squares fit did not converge; diagnostics in the message."""

    category = "fit-failure"


class ConfigError(DDMagError):
    """Configuration file is malformed or violates the schema."""

    category = "config-error"
