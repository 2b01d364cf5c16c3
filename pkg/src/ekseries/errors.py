"""Exception types shared across the package.

Each engine error has a distinct CLI exit code (see ``cli.py``); exit code 1
is reserved for verification-check failures and 2 for usage/parse errors.
"""


class EkseriesError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NotConvergent(EkseriesError):
    """Requested a direct lattice sum outside its absolute-convergence range."""

    exit_code = 3


class PrecisionBudget(EkseriesError):
    """The requested tolerance is unreachable within the configured budgets."""

    exit_code = 4


class PoleEncountered(EkseriesError):
    """Evaluation point fell on (or numerically too close to) a pole."""

    exit_code = 5


class ContourTooLarge(EkseriesError):
    """No valid contour radius below the distance to the nearest pole."""

    exit_code = 6


class DegreeExhausted(EkseriesError):
    """A truncated-series operation consumed more degree validity than tracked."""

    exit_code = 7


class NotRational(EkseriesError):
    """A cyclotomic computation failed to land in the base ring.

    For mathematically valid input this signals an implementation or
    precision fault, so it is an error rather than a check failure.
    """

    exit_code = 8


class NotDivisible(EkseriesError):
    """An exact division by p (or a power) was not possible at full precision."""

    exit_code = 8


class SeriesFormatError(EkseriesError):
    """Malformed series file; carries a 1-based line number when known."""

    exit_code = 2

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
