"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class AlgDynError(ValueError):
    """Base class for every input or precondition failure raised by algdyn."""


class DimensionMismatch(AlgDynError):
    pass


class _PositionedError(AlgDynError):
    """Parse failure that remembers where in the input text it happened."""

    def __init__(self, message: str, text: str = '', position: Optional[int] = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class PolyParseError(_PositionedError):
    pass


class LatticeParseError(_PositionedError):
    pass


class SingularLattice(AlgDynError):
    pass


class NotLopsided(AlgDynError):
    pass


class VanishingCharacterValue(AlgDynError):
    """A character value of f is zero, so the stratum has a torus factor."""


class OracleMismatch(AlgDynError):
    pass


class NonSquareMatrix(AlgDynError):
    pass


class InvalidEndomorphism(AlgDynError):
    """The matrix does not preserve the relation lattice of the group."""


class EquivarianceViolation(AlgDynError):
    pass


class NotInSigma(AlgDynError):
    pass


class WindowTooLarge(AlgDynError):
    pass


class WitnessRefuted(AlgDynError):
    """Exhaustive search found a preimage for a claimed non-surjectivity witness."""
