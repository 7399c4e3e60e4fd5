"""Exception hierarchy shared across the ansc package."""

from __future__ import annotations


class AnscError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AnscError, ValueError):
    """An operation received a value outside its mathematical domain."""


class ConfigurationError(AnscError, ValueError):
    """A configuration object (budget, thresholds, spec) is inconsistent."""


class NotFoundError(AnscError, LookupError):
    """A referenced entity (element, datacenter, scope) does not exist."""


class SchemaError(AnscError, ValueError):
    """A document failed schema validation; ``path`` points at the offender."""

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.reason = message
