"""Exception hierarchy shared by the library and the command line front end."""


class DomainError(ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class DataError(ValueError):
    """Observed data violate the model, e.g. a sample outside the support.

    ``index`` is the 0-based position of the offending sample when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class StreamExhausted(DataError):
    """A sample source ran dry before a stage reached its planned size."""

    def __init__(self, message, stage, needed, available):
        super().__init__(message)
        self.stage = stage
        self.needed = needed
        self.available = available

    @property
    def shortfall(self):
        return self.needed - self.available
