"""Exception types raised by relaxkit."""


class RelaxkitError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RelaxkitError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """Transfer function evaluated at (or numerically at) a pole."""

    def __init__(self, s, eigenvalue):
        self.s = s
        self.eigenvalue = eigenvalue
        super().__init__(
            f"s={s!r} coincides with eigenvalue {eigenvalue!r} of A")


class UnstableForHankel(DomainError):
    """The Hankel operator needs a Hurwitz A."""


class NotModal(RelaxkitError):
    """A has complex or defective eigenstructure.

    This is itself a certificate that the system is not a relaxation
    system.
    """


class NonUnique(RelaxkitError):
    """The T-certificate equations have a nontrivial nullspace."""

    def __init__(self, nullity, message=None):
        self.nullity = nullity
        super().__init__(
            message or f"T is not unique: nullspace dimension {nullity}")


class NumericError(RelaxkitError, ArithmeticError):
    """A numerical routine failed to produce a usable answer."""


class DocumentError(RelaxkitError, ValueError):
    """A model or signal document is malformed."""
