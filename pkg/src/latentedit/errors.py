"""Shared exception types."""


class GeometryError(ValueError):
    """Identity geometry falls outside the drawable canvas."""


class DatasetError(ValueError):
    """Dataset construction request cannot be satisfied."""


class StageError(RuntimeError):
    """An operation needs a training stage that has not run yet."""
