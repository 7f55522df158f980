"""Errors raised by the algebra, field and campaign layers.

Verification routines report violated identities instead of raising; the
classes below are for inputs that cannot be processed at all.
"""


class CliffordError(Exception):
    pass


class SignatureMismatchError(CliffordError, TypeError):
    """Two operands belong to different algebras Cl(p,q)."""


class SignatureError(CliffordError, ValueError):
    pass


class GradeError(CliffordError, ValueError):
    pass


class SingularElementError(CliffordError, ArithmeticError):
    """Left multiplication by the element is (numerically) not invertible."""


class SeriesDivergenceError(CliffordError, ArithmeticError):
    pass


class ExactModeError(CliffordError, ValueError):
    """An operation with no rational closed form was requested in exact mode."""


class FrameError(CliffordError, ValueError):
    pass


class FrameGradeError(FrameError):
    pass


class GaugeError(CliffordError, ValueError):
    pass


class ConnectionMismatchError(CliffordError, ValueError):
    """The connection attached to a context does not solve the frame equation."""


class CovariantConstancyError(CliffordError, ValueError):
    pass


class CampaignConfigError(CliffordError, ValueError):
    pass
