class ValidationError(ValueError):
    """A record or argument violates a structural invariant."""


class CatalogError(RuntimeError):
    """A catalog or manifest could not be loaded."""
