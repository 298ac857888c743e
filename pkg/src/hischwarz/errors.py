"""Exception types raised across the package."""


class HiSchwarzError(ValueError):
    """Base class for all errors raised by hischwarz."""


class BasePointMismatch(HiSchwarzError):
    pass


class OrderError(HiSchwarzError):
    """A jet or series has too few coefficients for the requested operation."""


class ZeroConstantTerm(HiSchwarzError):
    pass


class CompositionMismatch(HiSchwarzError):
    """Inner jet value does not sit at the outer jet's base point."""


class CriticalPoint(HiSchwarzError):
    """f'(z0) vanishes (or nearly so); every Schwarzian-type operator divides by it."""


class PoleError(HiSchwarzError):
    pass


class SingularMatrix(HiSchwarzError):
    pass


class InsufficientTruncation(HiSchwarzError):
    """The q-expansion is too short for the requested accuracy at this height."""


class NotUpperHalfPlane(HiSchwarzError):
    pass


class InhomogeneousError(HiSchwarzError):
    pass


class DegenerateConfiguration(HiSchwarzError):
    pass
