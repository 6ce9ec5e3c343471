"""Exception types shared across the package."""


class FedgateError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FedgateError, ValueError):
    """Array shapes do not match what an operation requires."""


class NotPsdError(FedgateError, ValueError):
    """A matrix that must be positive semi-definite is not."""


class LabelError(FedgateError, ValueError):
    """A class label is outside the valid range."""


class ConfigError(FedgateError, ValueError):
    """An experiment or federation configuration is invalid."""


class InfeasibleError(FedgateError, ValueError):
    """A requested operation cannot be satisfied by the given data."""


class StratificationError(FedgateError, ValueError):
    """A stratified split would leave a class empty in some partition."""


class UndefinedMetricError(FedgateError, ValueError):
    """A metric is undefined for the given inputs (e.g. AUC with one class)."""


class ParseError(FedgateError, ValueError):
    """A serialized stream is malformed.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
