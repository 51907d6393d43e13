class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class DegenerateNormsError(DomainError):
    """Smoothed gradient norms hit zero, so refinement would blow up the schedule."""


class ParseError(ValueError):
    """A text input (CSV, JSON-lines, LIBSVM) could not be read.

    ``line`` is 1-based and refers to the physical line in the source.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    """An optimizer produced a non-finite loss or iterate."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")
