"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(ArithmeticError):
    """A quantity that must be non-negative came out clearly negative."""


class SingularSampleError(DomainError):
    """A sample needed for a logarithmic estimate is exactly zero."""


class IntegratorDivergence(RuntimeError):
    """A time step produced a non-physical or non-finite state.

    Attributes
    ----------
    step : int or None
        Index of the failing step within the trajectory, when known.
    index : int or None
        Trajectory index within an ensemble, when known.
    """

    def __init__(self, message, step=None, index=None):
        self.step = step
        self.index = index
        parts = [message]
        if index is not None:
            parts.append(f"trajectory={index}")
        if step is not None:
            parts.append(f"step={step}")
        super().__init__(", ".join(parts))
