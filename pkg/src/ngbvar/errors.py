"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class NgbvarError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(NgbvarError):
    pass


class DuplicateError(NgbvarError):
    pass


class GapError(NgbvarError):
    def __init__(self, series_id: str, missing: str):
        super().__init__(f"series {series_id!r} has a gap: missing {missing}")
        self.series_id = series_id
        self.missing = missing


class DomainError(NgbvarError, ValueError):
    pass


class OrderingError(NgbvarError):
    pass


class FrequencyError(NgbvarError):
    pass


class AlignmentError(NgbvarError):
    pass


class InsufficientDataError(NgbvarError):
    pass


class CollinearityError(NgbvarError):
    pass


class ConsistencyError(NgbvarError):
    """An internal identity that must hold by construction was violated."""


class NumericalError(NgbvarError):
    def __init__(self, message: str, equation: int | None = None, sweep: int | None = None):
        super().__init__(message)
        self.equation = equation
        self.sweep = sweep


class NormalizationError(NgbvarError):
    pass


class ConfigError(NgbvarError):
    pass
