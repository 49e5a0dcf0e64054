"""Exception types shared across the package.

Two failure families matter to callers: bad input (caller can fix the call)
and numerical failure (the computation could not deliver a trustworthy
answer). The CLI maps them to exit codes 1 and 2.
"""


class PriorForgeError(Exception):
    """Base class for all package errors."""


class InputError(PriorForgeError):
    """The caller supplied invalid or inconsistent input."""


class NumericalError(PriorForgeError):
    """A computation failed to produce a trustworthy result.

    Raised for non-convergent quadrature where a finite answer is required,
    and for internal consistency violations that must fail loudly rather
    than propagate silently.
    """
