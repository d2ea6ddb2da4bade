"""Exception hierarchy shared across the workbench.

ConfigError maps to CLI exit code 2, DataError to exit code 3.
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class ConfigError(WorkbenchError):
    """Invalid or inconsistent configuration (bad flags, hash mismatch)."""


class DataError(WorkbenchError):
    """Malformed or unusable input data (corpus, datasets, embeddings)."""


class ExtractionError(DataError):
    """Source artifact could not be extracted (binary input etc.)."""
