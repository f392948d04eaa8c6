"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DegenerateSampleError(ValueError):
    """Raised when a sample carries no usable information for an estimator,
    e.g. every observation coincides with the location."""


class UnsupportedCombinationError(ValueError):
    """Raised when a request combines options that are individually valid
    but have no implementation, e.g. the closed-form oracle with p != 2."""
