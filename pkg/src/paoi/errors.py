"""Exception types shared across the package."""


class PaoiError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PaoiError):
    """A configuration value is missing, malformed, or out of range."""


class IncompatiblePolicyError(PaoiError):
    """Sampler/scheduler combination does not match the server mode."""


class InsufficientDeliveriesError(PaoiError):
    """A simulated source delivered too few packets for reliable statistics."""


class NonConvergenceError(PaoiError):
    """An iterative solver hit its iteration cap before reaching tolerance."""
