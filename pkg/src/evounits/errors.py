"""Exception types shared across the package."""


class EvoUnitsError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EvoUnitsError):
    """Non-finite or otherwise invalid numeric input to a math operation."""


class ConfigError(EvoUnitsError):
    """Invalid experiment configuration; message names the offending field."""


class CheckpointError(EvoUnitsError):
    """Checkpoint file cannot be decoded or fails integrity checks."""


class EvaluationError(EvoUnitsError):
    """A fitness evaluation failed; carries the path of the dumped genome."""

    def __init__(self, message, genome_path=None):
        super().__init__(message)
        self.genome_path = genome_path
