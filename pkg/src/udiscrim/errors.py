"""Exception hierarchy. The CLI maps these onto exit codes."""


class DiscrimError(Exception):
    """Base class for all library errors."""


class InputError(DiscrimError, ValueError):
    """Malformed or inconsistent input (bad dims, non-unitary matrix, ...)."""


class NotDistinguishableError(DiscrimError):
    """The requested construction does not exist for these gates."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class StrategyInapplicable(DiscrimError):
    """A discrimination strategy's precondition does not hold."""


class NoBasisFound(DiscrimError):
    """The LOCC measurement search failed to certify a basis."""


class BudgetExceeded(DiscrimError):
    """No plan fits within the oracle-use budget."""


class NumericalFailure(DiscrimError):
    """An internal numerical check failed."""
