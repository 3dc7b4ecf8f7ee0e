"""Exception types raised by the longest-run test."""


class PreconditionError(ValueError):
    """An argument lies outside the domain of the operation."""


class EstimationError(ValueError):
    """The mean function could not be estimated on the given data."""


class SampleTooSmallError(ValueError):
    """Fewer observations than the test needs."""

    def __init__(self, n, minimum=4):
        super().__init__(f"sample too small (minimum {minimum}), got n={n}")
        self.n = n
        self.minimum = minimum


class SimulationError(RuntimeError):
    """A Monte Carlo replicate failed."""
