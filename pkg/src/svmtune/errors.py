"""Exception types shared across the package."""


class SvmTuneError(Exception):
    """Base class for svmtune errors."""


class DataError(SvmTuneError):
    """Raised for malformed input files or datasets that violate invariants
    (unparseable lines, single-class data, impossible fold counts)."""


class ConvergenceError(SvmTuneError):
    """Raised when the SVM solver fails to reach its tolerance within the
    configured iteration budget."""
