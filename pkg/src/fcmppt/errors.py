"""Exception hierarchy shared by every fcmppt module."""


class FcmpptError(Exception):
    """Base class for all package errors."""


class DomainError(FcmpptError, ValueError):
    """An input lies outside the domain of a model equation."""


class EnvelopeError(DomainError):
    """The plant left its valid operating envelope during a simulation."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class IntegrationError(FcmpptError, ArithmeticError):
    """A fixed-step integration produced non-finite state."""


class InferenceError(FcmpptError):
    """The fuzzy engine produced an empty aggregate."""


class OracleError(FcmpptError):
    """The brute-force MPP search found a non-unimodal power curve."""


class ConfigError(FcmpptError, ValueError):
    """A configuration document or model file is malformed or incomplete."""
