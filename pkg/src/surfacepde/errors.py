"""Exception hierarchy shared by every module of the engine."""


class SurfaceError(Exception):
    """Base class for all engine errors."""


class ParseError(SurfaceError):
    pass


class DimensionError(SurfaceError, ValueError):
    pass


class SignatureError(SurfaceError):
    """The intersection form is not Lorentzian."""


class CurveError(SurfaceError):
    """A declared negative curve violates C.C < 0 or ample.C > 0."""


class PreconditionError(SurfaceError):
    pass


class NotPseudoeffective(SurfaceError):
    """The Zariski iteration certified that the class lies outside its domain.

    ``support`` and ``signs`` carry the failing subset of curve indices and the
    pairing sign pattern for diagnostics.
    """

    def __init__(self, message, support=(), signs=()):
        super().__init__(message)
        self.support = tuple(support)
        self.signs = tuple(signs)


class GuardError(SurfaceError):
    """An enumeration guard (subset oracle, search height) was exceeded."""


class SearchFailure(GuardError):
    pass


class DegenerateCharge(SurfaceError):
    """Im Z = 0, so the phase and its cotangent are undefined."""


class PhaseCollision(SurfaceError):
    """c_0 = 0: the phase equals arg(+-rho_0) and the quadratic term vanishes."""


class SpecError(SurfaceError):
    pass
