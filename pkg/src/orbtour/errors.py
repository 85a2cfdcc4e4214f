"""Exception types shared across modules."""


class OrbtourError(Exception):
    """Base class for all toolkit errors."""


class SingularStateError(OrbtourError, ValueError):
    """Raised when a state hits a representation singularity (e.g. i = pi
    with prograde retrograde factor, or w <= 0 in the variational equations)."""


class InsufficientFuelError(OrbtourError, ValueError):
    """Raised when a maneuver would need more fuel than the stated budget."""


class SchemaError(OrbtourError, ValueError):
    """Raised on malformed or version-mismatched artifact files."""
