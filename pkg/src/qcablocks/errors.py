"""Exception hierarchy shared by all qcablocks modules."""


class QCAError(Exception):
    """Base class for all structured failures raised by this package."""


class DimensionMismatch(QCAError):
    """Operands have incompatible shapes or an inconsistent factor shape."""


class NontrivialCenter(QCAError):
    """The algebra's center is larger than the scalars, so it is not a
    single tensor factor."""


class NumericalFailure(QCAError):
    """A numerically guarded construction did not converge within its
    retry budget."""


class NotCommuting(QCAError):
    """Two algebras expected to commute do not."""


class NotGenerating(QCAError):
    """Two algebras expected to jointly generate the full matrix algebra
    do not."""


class NotLocal(QCAError):
    """An operator expected to be localized on a stated cell region is not."""


class NotSeparable(QCAError):
    """A vector expected to be a tensor product has Schmidt rank > 1."""


class IsoSolveFailed(QCAError):
    """Recovering the conjugating unitary of a *-isomorphism left a residual
    above tolerance."""


class ReconstructionMismatch(QCAError):
    """A decomposed automaton does not reproduce the input evolution within
    the certification tolerance."""


class WindowTooSmall(QCAError):
    """The finite window does not leave enough quiescent slack for the
    requested check."""


class PreconditionViolated(QCAError):
    """An operation's documented precondition does not hold for the inputs."""


class IndivisibleWidth(QCAError):
    """A window width is not divisible by the requested grouping factor."""
