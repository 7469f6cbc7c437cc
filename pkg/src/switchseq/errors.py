"""Exception hierarchy.

``ValidationError`` covers bad inputs (CLI exit code 1); ``NumericalError``
covers failures of the numerics themselves (CLI exit code 2).
"""


class SwitchSeqError(Exception):
    pass


class ValidationError(SwitchSeqError, ValueError):
    """Input violates a documented constraint."""

    def __init__(self, field, constraint, value=None):
        self.field = field
        self.constraint = constraint
        self.value = value
        msg = f"{field}: {constraint}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class InsufficientSamplesError(ValidationError):
    pass


class ConstraintViolationError(ValidationError):
    pass


class NoNeighborError(ValidationError):
    pass


class UnsupportedNoiseError(ValidationError):
    pass


class LoadError(SwitchSeqError, OSError):
    """A scenario, array or observation file could not be read."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"cannot load {self.path}: {reason}")


class NumericalError(SwitchSeqError, ArithmeticError):
    pass


class DegenerateArrayError(NumericalError):
    pass


class CannotScaleError(NumericalError):
    pass
