"""Exception types shared across the engine."""


class PlasmaugError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(PlasmaugError, ValueError):
    """Raised when runtime data violates an operation's preconditions."""


class ConfigurationError(PlasmaugError, ValueError):
    """Raised when a pipeline, node, or distribution is malformed."""
