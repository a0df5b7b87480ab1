"""Exception types raised across the package."""


class UrnError(Exception):
    """Base class for all errors raised by :mod:`polyaurn`."""


class StructuralError(UrnError, ValueError):
    """A tensor or vector has the wrong shape or size."""


class DimensionMismatch(UrnError, ValueError):
    """Arguments disagree on the number of colours or states."""


class ParseError(UrnError, ValueError):
    """A tensor file could not be parsed."""


class NotBalanced(UrnError):
    """The replacement tensor has no common column sum."""


class NotTwoColour(UrnError):
    """An operation restricted to d = 2 was given another colour count."""


class NotContractive(UrnError):
    """The ergodicity coefficients do not certify a contraction (q >= 1)."""


class EmptyUrn(UrnError):
    """Drawing from an urn whose total mass is zero."""


class TooLarge(UrnError):
    """An exact enumeration would exceed the configured size limit."""


class NodeOutOfRange(UrnError, IndexError):
    """A node index outside the grown DAG."""


class DepthMismatch(UrnError, ValueError):
    """Leaf profile does not have m**depth leaves."""


class CertificateViolated(UrnError, AssertionError):
    """A geometric-decay bound failed; indicates a bug, not a math failure."""


class MaxIterExceeded(UrnError):
    """Fixed-point iteration hit its iteration cap.

    Attributes
    ----------
    x : ndarray
        Last iterate.
    residual : float
        ``||F(x) - x||_1`` at the last iterate.
    iterations : int
    history : list of ndarray
        The last few iterates, useful to see oscillation.
    """

    def __init__(self, x, residual, iterations, history=()):
        self.x = x
        self.residual = residual
        self.iterations = iterations
        self.history = list(history)
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
