"""Exception hierarchy shared by every module of the package."""


class IDPError(Exception):
    """Base class for all errors raised by ``idpe``."""

    code = "IDPError"

    def to_json(self):
        return {"error": type(self).__name__, "message": str(self)}


class InvalidElement(IDPError, ValueError):
    pass


class ZeroAtomMass(IDPError, ValueError):
    pass


class Nonintegrable(IDPError, ValueError):
    pass


class EmptySpec(IDPError, ValueError):
    pass


class DuplicateCoords(IDPError, ValueError):
    pass


class NoWitness(IDPError, ValueError):
    pass


class OverflowGuard(IDPError, RuntimeError):
    pass


class WindowUnderflow(IDPError, ValueError):
    pass


class DimensionMismatch(IDPError, ValueError):
    pass


class GroupMismatch(IDPError, ValueError):
    pass


class NullModel(IDPError, ValueError):
    pass


class NoInvariantEvent(IDPError, ValueError):
    pass


class NotMeasurePreserving(IDPError, ValueError):
    pass


class NotProbability(IDPError, ValueError):
    pass


class IndexMismatch(IDPError, ValueError):
    pass


class BudgetExceeded(IDPError, RuntimeError):
    pass


class HypothesisViolation(IDPError, ValueError):
    pass


class UnsupportedDescriptor(IDPError, TypeError):
    pass


class ConfigError(IDPError, ValueError):
    pass
