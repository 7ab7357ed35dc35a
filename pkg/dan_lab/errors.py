"""Exception hierarchy for dan-lab."""


class DanLabError(Exception):
    """Base class for every error raised by dan-lab."""


class DimensionError(DanLabError):
    """Raised when tensor or sample shapes do not fit together."""


class EmptyInputError(DanLabError):
    """Raised when a batch or sample has no rows."""


class ContractError(DanLabError):
    """Raised when a caller breaks an operation's precondition."""


class NonFiniteError(DanLabError):
    """Raised when an operation produces NaN or infinite values."""


class CheckpointError(DanLabError):
    """Raised when a checkpoint cannot be read or does not fit a network."""


class ValidationError(DanLabError):
    """
    Raised when a configuration or parameter set is invalid.

    Carries every violated field so the user can fix them all in one go.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class TrainingAbort(DanLabError):
    """
    Raised when a training run hits a non-finite loss or parameter.

    The partial loss trace and the snapshots taken so far are attached so
    callers can still persist them.
    """

    def __init__(self, term, iteration, detail=""):
        self.term = term
        self.iteration = iteration
        self.trace = None
        self.snapshots = {}
        message = f"non-finite {term} at iteration {iteration}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
