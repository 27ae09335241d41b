"""Exception hierarchy shared by the services, the CLI and the HTTP layer."""


class LabError(ValueError):
    """Base class for every error raised by the lab."""

    exit_code = 1


class InvalidInputError(LabError):
    """A precondition of an operation was not met."""

    exit_code = 2


class DataError(LabError):
    """An input file or payload could not be parsed."""

    exit_code = 3


class TupleInvariantError(InvalidInputError):
    """A matrix tuple is not a commuting family of contractions."""

    def __init__(self, message: str, pair: tuple[int, ...] | None = None):
        super().__init__(message)
        self.pair = pair


class InvariantViolation(LabError):
    """A certified check failed during a run."""

    exit_code = 4
