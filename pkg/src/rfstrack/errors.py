"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An argument breaks a documented precondition (dimension mismatch, bad range)."""


class NumericalDegeneracyError(ArithmeticError):
    """A covariance or normalizer lost positive definiteness / all mass."""
