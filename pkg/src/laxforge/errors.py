"""Exception hierarchy shared by the symbolic and numeric layers."""


class LaxforgeError(Exception):
    """Base class for all library errors."""


class DivisionByZeroPolynomial(LaxforgeError, ZeroDivisionError):
    pass


class UnknownSymbol(LaxforgeError, KeyError):
    def __init__(self, symbol):
        super().__init__(symbol)
        self.symbol = symbol

    def __str__(self):
        return f"no x-derivative known for symbol {self.symbol!r}"


class IllFormedSystem(LaxforgeError):
    """Rewrite rules are cyclic, so reduction would not terminate."""


class EvaluationPole(LaxforgeError, ZeroDivisionError):
    pass


class DegenerateDenominator(LaxforgeError):
    """A transformation denominator vanishes identically (Riccati locus)."""


class HalfIntegerAlpha(LaxforgeError):
    pass


class ZeroAlpha(LaxforgeError):
    pass


class DegenerateState(LaxforgeError):
    """Lift impossible: u vanishes or z sits on a fixed point {0, alpha}."""


class _Located(LaxforgeError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class OrthogonalKernel(_Located):
    pass


class ZeroComponent(_Located):
    """A kernel-vector component needed as a divisor is zero."""


class PoleAtLambda(LaxforgeError):
    pass


class InsufficientOrders(LaxforgeError):
    pass


class PoleOnGrid(_Located):
    pass


class StepUnderflow(_Located):
    """Adaptive integration collapsed its step, usually at a movable pole."""


class MissingDerivative(LaxforgeError):
    pass
