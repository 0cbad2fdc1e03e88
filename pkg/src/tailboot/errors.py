"""Exception hierarchy.

Input problems (bad k, bad arguments, unreadable files) derive from
:class:`InputError`; numerical failures of an estimator on otherwise valid
input derive from :class:`EstimationError`. The CLI maps the two families to
different exit codes.
"""
from __future__ import annotations


class TailbootError(Exception):
    """Base class for all package errors."""


class InputError(TailbootError, ValueError):
    pass


class EstimationError(TailbootError, ArithmeticError):
    pass


class BadK(InputError):
    pass


class BadT(InputError):
    pass


class ParseError(InputError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class EmptyFile(InputError):
    pass


class NonPositiveTail(EstimationError):
    pass


class DegenerateTail(EstimationError):
    pass


class OutOfDomain(EstimationError):
    pass


class EmptyBootstrap(EstimationError):
    pass


class ZeroBaseEstimate(EstimationError):
    pass


class AllReplicatesFailed(EstimationError):
    def __init__(self, failures: int, replicates: int, message: str = ""):
        self.failures = failures
        self.replicates = replicates
        super().__init__(message or f"{failures} of {replicates} bootstrap replicates failed")
