"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(DomainError):
    """An operation was asked to do something illegal on a valid value,
    e.g. removing a range that is not fully covered."""


class InvariantError(RuntimeError):
    """Internal state violated a structural invariant. Never expected."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class IngestionError(ValueError):
    """Malformed population or layout input."""
