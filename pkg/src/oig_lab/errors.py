"""Exception types shared across the package.

Each carries the CLI exit code it maps to.
"""


class OigLabError(Exception):
    exit_code = 1


class InvalidArgument(OigLabError, ValueError):
    exit_code = 2


class ParseError(InvalidArgument):
    exit_code = 2


class RealizabilityError(OigLabError):
    """The sample is not consistent with any hypothesis in the class."""

    exit_code = 3


class AssertionFailure(OigLabError):
    exit_code = 4


class BudgetExceeded(OigLabError):
    """A brute-force search was asked to run beyond its configured size limits."""

    exit_code = 5
