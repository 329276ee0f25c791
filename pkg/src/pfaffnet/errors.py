"""Exception types shared across the package."""


class PfaffnetError(Exception):
    """Base class for package-specific failures."""


class DomainError(PfaffnetError, ValueError):
    """An evaluation left the open interval / box where the map is analytic."""


class ShapeError(PfaffnetError, ValueError):
    """Array shapes inconsistent with the declared architecture."""


class BudgetError(PfaffnetError, RuntimeError):
    """A grid or jet request exceeded the configured memory/size budget."""


class ConfigError(PfaffnetError, ValueError):
    """A configuration document failed schema or semantic validation."""
