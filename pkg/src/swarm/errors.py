"""Exception types shared across the package."""


class SwarmError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SwarmError):
    """Invalid configuration value (counts, rates, thresholds, schema fields)."""


class NotFoundError(SwarmError):
    """A referenced edge, node, flow, or job does not exist."""


class StateError(SwarmError):
    """An action is inconsistent with the current network state."""


class InvalidRoutingError(SwarmError):
    """A routing table update left a reachable destination with zero total weight."""


class UnreachableError(SwarmError):
    """No live route exists between the requested endpoints."""


class UnsupportedFailureError(SwarmError):
    """A baseline was asked to handle a failure kind it does not consider."""


class TableGenerationError(SwarmError):
    """Offline table generation could not populate a grid cell."""
