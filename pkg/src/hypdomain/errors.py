"""Exceptions raised by hypdomain."""


class HypDomainError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrix(HypDomainError):
    pass


class IdentityElement(HypDomainError):
    pass


class FixesBasepoint(HypDomainError):
    pass


class DegenerateCut(HypDomainError):
    pass


class GeneratorNotFace(HypDomainError):
    """A generator (or its inverse) does not support a face of the domain.

    ``index`` is the signed generator index and ``eliminated_by`` the word of
    the cut that removed its face (``None`` if the bisector never cut).
    """

    def __init__(self, index, eliminated_by=None):
        self.index = index
        self.eliminated_by = eliminated_by
        msg = f"generator {index} does not support a face"
        if eliminated_by is not None:
            msg += f" (eliminated by word {eliminated_by})"
        super().__init__(msg)


class NotVerified(HypDomainError):
    pass


class NoEdges(HypDomainError):
    pass


class UnboundedDomain(HypDomainError):
    pass


class QuadratureNotConverged(HypDomainError):
    pass


class InvalidRho(HypDomainError):
    pass


class ExplosionGuard(HypDomainError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"tile count exceeded cap of {cap}")


class InsufficientRadius(HypDomainError):
    pass


class BuildFailed(HypDomainError):
    pass


class ParseError(HypDomainError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
