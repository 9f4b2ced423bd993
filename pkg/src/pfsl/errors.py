"""Exception hierarchy shared by every pfsl module."""


class PfslError(Exception):
    """Base class for all errors raised by pfsl."""


class DomainError(PfslError, ValueError):
    """An input lies outside the range a model is defined on."""


class SingularImpedanceError(PfslError, ZeroDivisionError):
    """A closed-form expression hit a zero denominator."""


class InfeasibleSynthesisError(PfslError):
    """No positive component values satisfy the resonance conditions."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateTopologyError(PfslError):
    """The nodal system is singular, usually because of a floating node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConfigError(PfslError, ValueError):
    """A netlist or solver configuration violates an operation's preconditions."""


class ConvergenceError(PfslError):
    """Newton iteration failed; carries the residual history for diagnostics."""

    def __init__(self, message, history=None, p_in=None):
        super().__init__(message)
        self.history = list(history or [])
        self.p_in = p_in


class NoBifurcationError(PfslError):
    """A sweep never crossed the subharmonic power floor."""


class TraceError(PfslError, ValueError):
    """A sweep trace is too short or otherwise unusable for an extraction."""


class NetlistSyntaxError(PfslError, ValueError):
    """Parse failure with the 1-based line and column of the offending token."""

    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message
