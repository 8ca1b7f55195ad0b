"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid input data or configuration (CLI exit code 2)."""


class NumericalAbort(RuntimeError):
    """A non-finite value was produced during training (CLI exit code 3)."""
