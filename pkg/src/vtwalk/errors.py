"""Exception hierarchy shared by all vtwalk modules."""


class VTWalkError(Exception):
    """Base class for every error raised by vtwalk."""


class TreeError(VTWalkError, ValueError):
    """Malformed computation tree."""


class CycleOrOrphan(TreeError):
    pass


class MarkedInternal(TreeError):
    pass


class ZeroTime(TreeError):
    pass


class UnknownVertex(VTWalkError, KeyError):
    pass


class EmptyTree(VTWalkError, ValueError):
    pass


class NotMarked(VTWalkError, ValueError):
    pass


class DimensionTooLarge(VTWalkError):
    pass


class DimensionMismatch(VTWalkError, ValueError):
    pass


class NumericalFailure(VTWalkError, ArithmeticError):
    pass


class InvalidSize(VTWalkError, ValueError):
    pass


class DuplicateLines(VTWalkError, ValueError):
    pass


class InvalidParams(VTWalkError, ValueError):
    pass
