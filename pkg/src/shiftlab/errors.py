"""Exception types shared across the package."""


class ShiftlabError(Exception):
    """Base class for every error raised by shiftlab."""


class InvalidInputError(ShiftlabError, ValueError):
    """Arguments violate a documented precondition."""


class CapacityError(ShiftlabError):
    """A size limit (alphabet, enumeration cap, horizon) would be exceeded."""


class DegenerateInputError(ShiftlabError, ValueError):
    """The input is empty or full where a proper subset is required."""


class InsufficientDataError(ShiftlabError):
    """The horizon holds too few blocks or checkpoints for the estimate."""


class ConstructionError(ShiftlabError):
    """A construction step cannot satisfy its defining inequalities."""
