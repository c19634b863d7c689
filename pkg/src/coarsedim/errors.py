"""Error taxonomy shared by all modules.

InputError maps to CLI exit code 2, RefusalError to exit code 3.  A refusal
means the toolkit declines to answer (budget, unsupported size); it is never
a negative mathematical verdict.
"""


class InputError(ValueError):
    """A precondition on user-supplied data does not hold."""


class RefusalError(RuntimeError):
    """The operation refuses to run (resolution, cap or support limits)."""


class SearchBudgetExceeded(RefusalError):
    """An exact search would exceed its configured state budget."""
