"""Exceptions raised across horofix."""


class DivergentSeries(ArithmeticError):
    """A closed-form functional was evaluated where its series does not converge."""


class UnboundedOrbit(RuntimeError):
    """Iterates left the declared bounded region."""


class NotFixed(RuntimeError):
    """The candidate point is not fixed by the map."""

    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"not a fixed point (residual {residual:.3e})")


class Unresolved(RuntimeError):
    """Common fixed point search ran out of budget."""

    def __init__(self, message, trace=None, residuals=None):
        self.trace = trace
        self.residuals = residuals or {}
        super().__init__(message)


class NotFound(RuntimeError):
    """No fixed point could be certified from the orbit's asymptotic center."""

    def __init__(self, message, diagnostic=None):
        self.diagnostic = diagnostic or {}
        super().__init__(message)


class ScenarioError(ValueError):
    """Malformed or schema-invalid scenario."""
