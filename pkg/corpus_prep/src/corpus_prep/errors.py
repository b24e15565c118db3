"""Typed failure modes for the preparation pipeline."""


class PrepError(Exception):
    """Base class for everything this package raises on purpose."""


class SetupError(PrepError):
    """A parser backend or model is unavailable (environment problem)."""


class DataError(PrepError):
    """The input corpus pair is unusable (content problem)."""
