"""Exception types shared across the package."""


class FedclError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FedclError):
    """Invalid configuration value or combination."""


class ShapeError(FedclError):
    """Array dimensions incompatible with the operation."""


class DataError(FedclError):
    """Invalid data content (bad label, non-finite value, malformed cell)."""


class FormatError(FedclError):
    """Malformed file structure (header, column count)."""


class ProtocolError(FedclError):
    """Invalid federated protocol state (e.g. aggregating zero updates)."""


class ShardSizeWarning(UserWarning):
    """Client shard size outside the recommended 500..1500 range."""
