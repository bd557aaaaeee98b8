"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the process exit code the CLI reports for it.
"""

from __future__ import annotations


class EntityRagError(Exception):
    exit_code = 1


class ConfigError(EntityRagError):
    """Raised with *every* validation problem found, not just the first."""

    exit_code = 2

    def __init__(self, errors: list[str] | str):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DataError(EntityRagError):
    exit_code = 3


class SchemaError(DataError):
    pass


class PreconditionError(DataError, ValueError):
    pass


class DimensionMismatchError(DataError, ValueError):
    pass


class KeyNotFoundError(DataError, LookupError):
    def __init__(self, key: str, where: str = "embedding store"):
        self.key = key
        super().__init__(f"key not found in {where}: {key!r}")


class TransportError(EntityRagError):
    exit_code = 4
