class ConfigurationError(ValueError):
    """Invalid or inconsistent simulation parameters."""


class DomainError(ValueError):
    """Argument outside the domain of a model function."""


class NumericalError(ArithmeticError):
    """A drop produced an ill-conditioned linear system."""
