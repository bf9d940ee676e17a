"""Exception hierarchy for the tarmac pipeline."""


class TarmacError(Exception):
    """Base class for all pipeline errors."""


class SchemaError(TarmacError):
    """Input file header is missing required columns or is unreadable."""


class ConfigError(TarmacError):
    """A configuration value is out of its documented range."""


class ContractViolation(TarmacError):
    """An operation precondition was violated by the caller."""


class ValidationError(TarmacError):
    """An artifact (zone map, config file, ...) failed load-time validation."""
