"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(ValueError):
    """An experiment config file failed validation.

    ``path`` holds the dotted key path of the offending entry.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ConstructionFailedError(RuntimeError):
    """A full-rank construction produced a rank-deficient system."""

    def __init__(self, message: str, rank: int, required: int):
        self.rank = rank
        self.required = required
        super().__init__(message)


class NonFiniteLossError(RuntimeError):
    """Training hit a NaN/inf loss; carries a diagnostic snapshot."""

    def __init__(self, epoch: int, loss: float, max_abs_param: float):
        self.epoch = epoch
        self.loss = loss
        self.max_abs_param = max_abs_param
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch} "
            f"(max |param| = {max_abs_param:.6g})"
        )
