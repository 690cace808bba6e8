class SegBubblesError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(SegBubblesError, ValueError):
    pass


class GeometryError(SegBubblesError):
    pass


class BracketError(SegBubblesError):
    """The derivative of r^2 V(r) does not change sign on the bracket."""


class ModelError(SegBubblesError):
    pass


class IntegrandError(SegBubblesError):
    def __init__(self, message: str, location=None):
        super().__init__(message if location is None else f"{message} at x={list(location)}")
        self.location = location


class ConfigError(SegBubblesError):
    pass
