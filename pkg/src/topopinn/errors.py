"""Exception types shared across the package."""


class TopopinnError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TopopinnError):
    """A differentiable primitive was evaluated outside its domain.

    Carries the primitive name and the offending operand value so failed
    runs can be traced back to the expression that produced them.
    """

    def __init__(self, primitive: str, operand):
        self.primitive = primitive
        self.operand = operand
        super().__init__(f"{primitive}: operand outside domain (got {operand!r})")


class NumericError(TopopinnError):
    """A non-finite value appeared where a finite one is required."""


class ConfigError(TopopinnError):
    """Invalid configuration, sample set, or command-line input."""


class CheckpointError(TopopinnError):
    """Checkpoint file is truncated, corrupt, or from an incompatible config."""


class DivergenceError(TopopinnError):
    """Training loss exceeded the divergence guard.

    Holds the epoch and the last loss value for diagnostics.
    """

    def __init__(self, epoch: int, total: float):
        self.epoch = epoch
        self.total = total
        super().__init__(f"training diverged at epoch {epoch}: total loss {total:.6e}")
