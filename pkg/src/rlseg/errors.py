"""Exception taxonomy mapped onto CLI exit codes (see cli module)."""


class RlsegError(Exception):
    """Base class for engine errors."""


class ConfigError(RlsegError):
    """Invalid or inconsistent configuration (exit code 2)."""


class DataError(RlsegError):
    """Malformed input data: bad shapes, unknown labels, broken files (exit code 3)."""


class NumericError(RlsegError):
    """Numerical failure: non-finite values, factorization breakdown (exit code 4)."""
