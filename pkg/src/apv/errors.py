"""Shared exception types.

Every deliberate failure mode in the toolkit maps to one of these, so both
library callers and the CLI can tell bad input apart from blown resource
budgets.
"""


class ApvError(Exception):
    """Base class for all toolkit errors."""


class InputError(ApvError, ValueError):
    """Malformed or ill-typed input: bad JSON, alphabet clashes, missing states."""


class MultisetUnderflow(ApvError, ValueError):
    """Multiset difference would produce a negative count."""


class DisabledTransition(ApvError, ValueError):
    """A Petri net transition was fired from a marking that does not enable it."""


class ResourceLimit(ApvError):
    """A configured cap (node count, candidate count, path count) was exceeded.

    Carries the name of the cap and its value so callers can report or retry
    with a larger budget.  Analyses never silently truncate: they either
    finish, or raise this.
    """

    def __init__(self, cap_name, cap_value, detail=""):
        self.cap_name = cap_name
        self.cap_value = cap_value
        self.detail = detail
        msg = f"resource cap exceeded: {cap_name}={cap_value}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
