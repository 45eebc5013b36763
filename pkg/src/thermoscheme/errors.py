"""Exception hierarchy.

Every numerical-condition failure carries a ``condition`` label such as
``"H1"`` or ``"P3"`` so the command line can name it.
"""


class ThermoError(Exception):
    condition: str | None = None

    def __init__(self, message: str = "", condition: str | None = None):
        super().__init__(message)
        if condition is not None:
            self.condition = condition


class OutOfDomain(ThermoError):
    pass


class NearCritical(ThermoError):
    pass


class EmptyPreimage(ThermoError):
    pass


class NotInW(ThermoError):
    pass


class NoConvergence(ThermoError):
    condition = "H2"


class NotMarkov(ThermoError):
    pass


class NoAlpha(ThermoError):
    pass


class Degenerate(ThermoError):
    pass


class CapExceeded(ThermoError):
    pass


class OrbitEscapes(ThermoError):
    pass


class TailNotExponential(ThermoError):
    condition = "H4"


class DistortionUnbounded(ThermoError):
    condition = "H5"


class DepthInfeasible(ThermoError):
    pass


class ZeroWeightCylinder(ThermoError):
    condition = "gibbs"


class NoBracket(ThermoError):
    condition = "P2"


class QDiverges(ThermoError):
    condition = "P4"


class EntropyUnavailable(ThermoError):
    pass


class InvalidConstants(ThermoError):
    pass


class AllNoise(ThermoError):
    pass


class DegenerateVariance(ThermoError):
    pass


class ConditionFailed(ThermoError):
    """A potential or scheme condition does not hold at this truncation."""
