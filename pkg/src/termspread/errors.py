"""Exception types shared across the toolkit.

Every error raised by the library derives from :class:`TermSpreadError`
so callers (notably the CLI) can separate data/validation problems from
computation failures.
"""

from __future__ import annotations


class TermSpreadError(Exception):
    """Base class for all library errors."""


# --- data ingestion / alignment -------------------------------------------

class MissingSeries(TermSpreadError):
    """A requested maturity or control column is absent from the inputs."""


class GapInDates(TermSpreadError):
    """A calendar month is missing from a series that must be contiguous."""


class MalformedRow(TermSpreadError):
    """A CSV cell could not be parsed (or is non-finite)."""


class EmptyInput(TermSpreadError):
    """An operation received no observations."""


class DomainError(TermSpreadError):
    """A numeric argument lies outside the operation's domain."""


class HorizonTooLong(TermSpreadError):
    """No (predictor, target) pairs survive the requested horizon."""


class CoverageError(TermSpreadError):
    """The recession series does not cover the requested sample."""


# --- fitting ----------------------------------------------------------------

class NotConverged(TermSpreadError):
    """The solver hit its iteration cap without an optimality certificate."""


class Separation(TermSpreadError):
    """The logistic MLE diverged (quasi-separated data)."""


class Singular(TermSpreadError):
    """A Newton step failed because the Hessian is not invertible."""


class SingleClass(TermSpreadError):
    """Both target classes are required but only one is present."""


class CountNeverAttained(TermSpreadError):
    """No regularization strength yields the requested support size."""


# --- evaluation / output ----------------------------------------------------

class LengthMismatch(TermSpreadError):
    """Paired sequences have different lengths."""


class ZeroBenchmark(TermSpreadError):
    """The benchmark forecast has zero mean squared error."""


class ConfigError(TermSpreadError):
    """An experiment configuration file is invalid."""


class IoError(TermSpreadError):
    """An output file could not be written."""
