"""Exception hierarchy shared across the package."""


class LayoutForgeError(Exception):
    """Base class for all package-specific errors."""


class DatasetError(LayoutForgeError):
    """Dataset file is malformed or fails validation."""


class FitError(LayoutForgeError):
    """A density model fit could not be completed."""


class ContractError(LayoutForgeError):
    """A pluggable component violated its interface contract."""
