"""Exception hierarchy. Every error raised by the library derives from
``HitstatError`` so the CLI can map it to an exit code."""


class HitstatError(Exception):
    pass


class ValidationError(HitstatError, ValueError):
    pass


class RowSumError(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class BadIndex(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class NotUnique(HitstatError):
    """The chain has more than one stationary distribution."""


class HorizonTooSmall(HitstatError):
    pass


class Unreachable(HitstatError):
    pass


class CapExceeded(HitstatError):
    pass


class Uncertifiable(HitstatError):
    pass


class NotReversible(HitstatError):
    pass


class NotIrreducible(HitstatError):
    pass


class StateInU(HitstatError, ValueError):
    pass


class BadParams(HitstatError, ValueError):
    pass


class BadHorizon(BadParams):
    pass


class BadWeights(HitstatError, ValueError):
    pass


class Disconnected(HitstatError, ValueError):
    pass


class SelfLoopUnlessRequested(HitstatError, ValueError):
    pass


class NotApplicable(HitstatError):
    """A bound was requested outside its applicability predicate."""


class PreconditionFailed(HitstatError):
    pass
