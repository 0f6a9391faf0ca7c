"""Exception hierarchy shared by every module."""


class OpscaleError(Exception):
    """Base class for all package errors."""


class DomainError(OpscaleError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericError(OpscaleError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class QuadratureError(NumericError):
    """Quadrature refinement did not meet the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CapacityError(OpscaleError):
    """A problem size exceeds a hard limit (e.g. dense Cholesky)."""


class CertificationError(OpscaleError):
    """A spectral density failed one of its required properties."""

    def __init__(self, prop, witness, detail=""):
        msg = f"psi failed {prop} at witness {witness!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.prop = prop
        self.witness = witness


class ConfigError(OpscaleError):
    """Invalid or incomplete configuration."""
