"""Exception taxonomy shared by all shrinkerlab modules."""


class ShrinkerlabError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(ShrinkerlabError):
    """Malformed input that is detectable before any computation."""


class DomainError(ShrinkerlabError):
    """Curvature data left the admissible open set of the curvature function.

    Carries the offending margin (negative or zero) and, when known, the sample
    index where admissibility first failed.
    """

    def __init__(self, message, margin=None, index=None):
        super().__init__(message)
        self.margin = margin
        self.index = index


class SolverError(ShrinkerlabError):
    """A root-find or ODE solve failed to converge; carries the state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StepRejected(ShrinkerlabError):
    """Explicit flow step violated the CFL bound; carries a usable dt."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ConsistencyError(ShrinkerlabError):
    """Two independent evaluation routes disagreed beyond the predicted bound."""


class ConfigError(ShrinkerlabError):
    """Run configuration is malformed (unknown key, out-of-range value, bad file)."""
