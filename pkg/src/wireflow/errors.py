"""Exception hierarchy shared by all wireflow modules."""


class WireflowError(Exception):
    """Base class for every error raised by the package."""


class DegeneratePi(WireflowError):
    """The sin/cos Gram matrix is (numerically) singular: the angle is nearly constant."""

    def __init__(self, det, det_min):
        super().__init__(f"det Pi = {det:.3e} below floor {det_min:.3e}")
        self.det = det
        self.det_min = det_min


class SolverFailure(WireflowError):
    """A linear solve was rejected by the diagonal-dominance guard."""


class StabilityViolation(WireflowError):
    """Explicit time step above the documented stability bound."""


class NoConvergence(WireflowError):
    """An iterative procedure did not reach its tolerance."""


class SingularJacobian(WireflowError):
    """Newton system could not be factorized."""


class InsufficientTail(WireflowError):
    """Too few usable trajectory points for a tail fit."""


class WindingMismatch(WireflowError):
    """Stored rotation index disagrees with the one recomputed from the angle."""


class ConfigError(WireflowError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed or non-strict configuration text."""


class ValidationError(ConfigError):
    """Configuration value violates an invariant."""
