"""Exception hierarchy shared by the library and the command line."""


class QuenchDualError(Exception):
    """Base class for all errors raised by this package."""


class InputError(QuenchDualError, ValueError):
    """Malformed or out-of-range user input (CLI exit code 2)."""


class ContractError(QuenchDualError, ValueError):
    """An operation was called outside of its contract."""


class GenerationError(QuenchDualError):
    """Random instance generation failed or the parameters are infeasible."""


class DegenerateInputError(QuenchDualError):
    """The combining step received a non-positive first-order coefficient."""


class ResourceLimitError(QuenchDualError):
    """The request exceeds a configured size limit (CLI exit code 3)."""


class PropagationError(QuenchDualError):
    """Time evolution could not meet its tolerance within the step budget."""
