"""Exception types shared across the package."""


class BridgeQAError(Exception):
    """Base class for every error raised by this library."""


class DimensionError(BridgeQAError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ConfigError(BridgeQAError, ValueError):
    """A configuration value violates a documented constraint."""


class ContractError(BridgeQAError, ValueError):
    """An operation was called outside its documented contract."""


class FormatError(BridgeQAError, ValueError):
    """A file does not conform to the expected on-disk format."""


class TrainingError(BridgeQAError, RuntimeError):
    """Training aborted, e.g. on a non-finite loss or gradient."""
