"""Exception types shared across the package."""


class ContractError(ValueError):
    """An operation was called outside its documented preconditions."""


class StructuralError(ValueError):
    """Shapes or block structures do not match the owning algebra."""


class UnderdeterminedError(ContractError):
    """Tabulated data does not pin down a unique linear extension."""

    def __init__(self, message, rank, required):
        super().__init__(f"{message} (rank {rank} of {required})")
        self.rank = rank
        self.required = required


class MeasureLookupError(KeyError):
    """A tabulated measure has no entry for the requested projection."""
