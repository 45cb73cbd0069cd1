"""Exception types shared across the package."""


class WildstabError(Exception):
    """Base class for every error raised by this package."""


class SeriesError(WildstabError):
    pass


class ModulusMismatch(SeriesError):
    pass


class VariableMismatch(SeriesError):
    pass


class NotAUnit(SeriesError):
    pass


class ZeroToPrecision(SeriesError):
    pass


class PrecisionUnderflow(WildstabError):
    pass


class SeriesSyntaxError(SeriesError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownVariable(SeriesError):
    def __init__(self, name: str, position: int | None = None):
        where = "" if position is None else f" (at position {position})"
        super().__init__(f"unknown variable {name!r}{where}")
        self.name = name
        self.position = position


# covers
class CoverError(WildstabError):
    pass


class NotWild(CoverError):
    pass


class Inseparable(CoverError):
    pass


class NotTame(CoverError):
    pass


class VerificationFailed(WildstabError):
    pass


class VerificationInconclusive(VerificationFailed):
    """The check ran out of precision before it could decide."""


# divisors
class DivisorError(WildstabError):
    pass


class CenterNotOnDivisor(DivisorError):
    pass


class NotBirational(DivisorError):
    pass


class PthPowerExpansion(DivisorError):
    pass


class ZeroLeadingBlock(DivisorError):
    pass


class NotReduced(DivisorError):
    pass


class NoGeneralPoint(DivisorError):
    """No F_p-rational point where the leading block is invertible."""


# resolve
class ResolveError(WildstabError):
    pass


class NotCoprime(ResolveError):
    pass


class MalformedState(ResolveError):
    pass


class StepLimit(ResolveError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace or []


class EmptyTestSet(ResolveError):
    pass


class UnsupportedState(ResolveError):
    """A reduction state outside the moves the engine implements."""


# oracle
class OracleError(WildstabError):
    pass


class NotUniformizable(OracleError, VerificationFailed):
    """The certificate does not parametrize a branch: the substitution is inconsistent."""


class MultiSlope(OracleError):
    pass


class NotTransportable(OracleError):
    pass


class DepthExceeded(OracleError):
    pass


class InputError(WildstabError):
    pass


class IoError(InputError):
    pass


class SchemaError(InputError):
    """Malformed problem file; ``path`` names the file, ``position`` the key or line:col."""

    def __init__(self, message: str, path: str = "", position: str = ""):
        super().__init__(message)
        self.path = path
        self.position = position

    def __str__(self):
        where = ":".join(x for x in (self.path, self.position) if x)
        return f"{where}: {self.args[0]}" if where else self.args[0]


class ValidationError(InputError):
    """A module precondition rejected the input; wraps the original error."""

    def __init__(self, message: str, cause: Exception | None = None, position: str = ""):
        super().__init__(message)
        self.cause = cause
        self.position = position
