"""Error taxonomy; the CLI maps these onto distinct exit codes."""


class MannerError(Exception):
    """Base class for expected failures."""


class ConfigError(MannerError):
    """Invalid or unknown configuration."""


class DataError(MannerError):
    """Unusable audio, corpus layout, or checkpoint payload."""


class CheckpointError(DataError):
    """Malformed or incompatible checkpoint file."""


class TrainingDiverged(MannerError):
    """Loss became non-finite."""
