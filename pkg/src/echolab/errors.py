"""Exception hierarchy shared by all echolab modules."""


class EchoLabError(Exception):
    """Base class for errors raised by echolab."""


class DimensionError(EchoLabError, ValueError):
    pass


class InvalidRegionError(EchoLabError, ValueError):
    pass


class NumericalValidityError(EchoLabError):
    """A computation produced a result outside its domain of validity."""


class FitDomainError(NumericalValidityError, ValueError):
    pass


class InsufficientDataError(NumericalValidityError, ValueError):
    pass


class UnreliableDerivativeError(NumericalValidityError):
    pass


class TruncationError(NumericalValidityError):
    def __init__(self, message, suggested_n_max=None):
        super().__init__(message)
        self.suggested_n_max = suggested_n_max


class ConfigError(EchoLabError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
