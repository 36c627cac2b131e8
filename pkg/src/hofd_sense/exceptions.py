"""Exception types raised across the package."""


class SpecError(ValueError):
    """An input-distribution or configuration record is malformed."""


class DegenerateError(ValueError):
    """A computation was asked of data with no variability to work on."""


class SmootherError(RuntimeError):
    """A local-polynomial fit could not be solved at some query point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
