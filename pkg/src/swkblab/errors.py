class SwkbLabError(Exception):
    """Base class for every error raised by swkblab."""


class SpecialFunctionError(SwkbLabError, ArithmeticError):
    """Pole of Gamma, invalid hypergeometric parameters or a series that did not converge."""


class ConstraintViolation(SwkbLabError, ValueError):
    pass


class NodelessnessViolation(SwkbLabError, ValueError):
    def __init__(self, message, coordinate):
        super().__init__(message)
        self.coordinate = coordinate


class UnsupportedCombination(SwkbLabError, NotImplementedError):
    pass


class DomainError(SwkbLabError, ValueError):
    pass


class NoTurningPoints(SwkbLabError):
    pass


class MultipleBrackets(SwkbLabError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


class QuadratureError(SwkbLabError):
    pass


class BracketFailure(SwkbLabError):
    pass


class SingularContour(SwkbLabError):
    pass


class ConfigError(SwkbLabError, ValueError):
    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field
