"""Runtime failures shared by the solvers and the pool simulator."""


class DivergenceError(RuntimeError):
    """A mean entry left the allowed range (or went non-finite)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SingularityError(RuntimeError):
    """A precision matrix could not be inverted."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
