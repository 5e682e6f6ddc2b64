"""Error types shared across the toolkit.

Every public operation distinguishes bad inputs (caller's fault, exit code 2
at the CLI) from numerical failures (quadrature or iteration did not converge,
also exit code 2) and from *verified violations*, which are not errors at all:
those are reported as fail verdicts with witnesses.
"""


class InputError(ValueError):
    """A precondition on caller-supplied data does not hold."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to converge within its budget."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
