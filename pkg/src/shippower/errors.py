"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class DegenerateFitError(ValueError):
    """A regression problem has no unique solution (e.g. no speed variation)."""


class IngestionError(ValueError):
    """A data file failed to parse or violated a schema invariant."""


class ConfigError(ValueError):
    """A configuration value is inconsistent or out of bounds."""


class ModeMismatchError(ValueError):
    """A model trained in one mode was used where the other mode is required."""


class StateError(RuntimeError):
    """An object was used before it reached the required state."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; carries the epoch and parameter norm."""

    def __init__(self, epoch: int, param_norm: float):
        self.epoch = epoch
        self.param_norm = param_norm
        super().__init__(
            f"non-finite loss at epoch {epoch} (parameter norm {param_norm:.6g})"
        )
