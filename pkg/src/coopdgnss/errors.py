"""Exception types shared across the package.

The CLI maps these onto process exit codes (config 2, solvability 3,
numerical 4), so library code should raise the most specific type that
applies instead of bare ValueError wherever a caller might need to
distinguish user error from numerical breakdown.
"""


class CoopDgnssError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CoopDgnssError):
    """Invalid or inconsistent configuration input."""


class SolvabilityError(CoopDgnssError):
    """Network visibility insufficient to estimate all user states."""


class NumericalError(CoopDgnssError):
    """Numerical breakdown: singular or hopelessly ill-conditioned system."""


class SingularGeometryError(NumericalError):
    """Satellite geometry too degenerate for position estimation."""
