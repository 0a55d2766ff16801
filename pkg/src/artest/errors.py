"""Exception types shared across the package."""


class DegenerateDataError(ValueError):
    """Data cannot support the requested computation (zero variance, singular covariance)."""


class DimensionError(ValueError):
    """Array dimensions do not agree with the model."""


class ReplicateError(RuntimeError):
    """A Monte Carlo replicate failed; ``index`` is the replicate number."""

    def __init__(self, index, message):
        super().__init__(f"replicate {index}: {message}")
        self.index = index
