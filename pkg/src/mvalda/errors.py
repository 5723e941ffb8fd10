"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Input data violates a structural requirement (labels, class sizes, finiteness)."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of the function."""


class DegenerateDataError(ValueError):
    """The data carry no information for the requested estimate."""


class ShapeError(ValueError):
    """Array dimensions do not match."""
