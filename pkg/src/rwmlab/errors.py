"""Exception types shared across the package."""
from .quadrature import QuadratureError

__all__ = ["ConfigError", "QuadratureError"]


class ConfigError(ValueError):
    """Invalid run configuration.

    ``errors`` holds every problem found, not only the first one.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
