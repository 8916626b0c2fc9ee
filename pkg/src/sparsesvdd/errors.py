"""Exception hierarchy shared by the library, the service, and the CLI."""


class DetectorError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(DetectorError):
    """Invalid parameter combination or out-of-range configuration."""


class DataError(DetectorError):
    """Malformed or inconsistent input data (files, matrices, masks)."""


class NumericalError(DetectorError):
    """A solver failed to converge or hit a degenerate problem."""
