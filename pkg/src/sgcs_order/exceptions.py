"""Exception types shared across the package."""


class SgcsError(Exception):
    """Base class for all package errors."""


class FiniteMassError(SgcsError, ValueError):
    """A density has bounded cumulative mass, so a serving BS may not exist."""


class DivergenceError(SgcsError, ValueError):
    """An expectation or tail integral required by a transform diverges."""


class DivergentTailError(DivergenceError):
    """The expected interference beyond every radius is infinite."""


class QuadratureError(SgcsError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, a, b, message="quadrature did not converge"):
        self.interval = (a, b)
        super().__init__(f"{message} on [{a!r}, {b!r}]")


class ScenarioParameterError(SgcsError, ValueError):
    """Scenario parameters fall outside the region where its claim applies."""


class UnknownScenarioError(SgcsError, KeyError):
    """No scenario is registered under the requested name."""
