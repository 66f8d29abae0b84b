"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to distinct process statuses without a lookup table drifting out of sync.
"""


class HamtopoError(ValueError):
    """A violated contract: bad data, unmet precondition or failed numerical check."""

    exit_code = 5


class ConfigError(HamtopoError):
    exit_code = 2


class ParseError(HamtopoError):
    exit_code = 3


class DomainMismatchError(HamtopoError):
    exit_code = 4


class NonFiniteFieldError(HamtopoError):
    exit_code = 5


class InverseUnavailableError(HamtopoError):
    exit_code = 5


class NormalizationError(HamtopoError):
    exit_code = 5


class SupportViolationError(HamtopoError):
    exit_code = 5


class TimeStepError(HamtopoError):
    exit_code = 5


class CalculusIdentityError(HamtopoError):
    exit_code = 5


class ReparamBoundError(HamtopoError):
    exit_code = 5


class FlatnessError(HamtopoError):
    exit_code = 5


class FlattenError(HamtopoError):
    exit_code = 5


class ProfileError(HamtopoError):
    exit_code = 5


class ResolutionError(HamtopoError):
    exit_code = 5


class NotCauchyError(HamtopoError):
    exit_code = 6


EXIT_CODES = {
    0: "success",
    1: "unexpected internal error",
    2: "usage error (bad flags or configuration values)",
    3: "input file could not be parsed",
    4: "domain or grid mismatch between inputs",
    5: "contract violated (invalid data, support, time step, identity, bound, flatness)",
    6: "sequence not Cauchy at the requested tolerance",
}
