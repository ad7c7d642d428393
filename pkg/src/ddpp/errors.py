"""Exception hierarchy shared by every stage of the pipeline."""


class DdppError(Exception):
    """Base class for all package errors."""

    #: CLI exit code for this family of failures
    exit_code = 3


class LimitError(DdppError):
    """A size, feasibility or hardware limit was hit (CLI exit code 2)."""

    exit_code = 2


class InputError(DdppError, ValueError):
    """Malformed or inconsistent input (CLI exit code 1)."""

    exit_code = 1


class GenerationExhausted(LimitError):
    pass


class InstanceInfeasible(LimitError, ValueError):
    """Some delivery exceeds the battery on its own."""


class ParseError(InputError):
    pass


class SchemaVersionMismatch(ParseError):
    pass


class LengthMismatch(InputError):
    pass


class NoUdgWindowFound(LimitError):
    pass


class HardwareInfeasible(LimitError):
    pass


class InvalidDuration(InputError):
    pass


class EmptyGrid(InputError):
    pass


class RegisterTooLarge(LimitError):
    pass


class NormDriftExceeded(DdppError):
    pass


class EmptyPool(InputError):
    pass


class PoolMissingSingletons(InputError):
    pass


class TooLarge(LimitError):
    pass


class DivisionByZeroGuard(DdppError, ZeroDivisionError):
    pass
