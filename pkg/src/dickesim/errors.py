"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical/simulation problems with 3, I/O problems with 4.
"""


class DickesimError(Exception):
    """Base class for all package errors."""


class ConfigError(DickesimError):
    """Malformed or semantically invalid experiment configuration."""


class GeometryError(DickesimError):
    """Invalid atomic geometry (bad positions, failed sampling)."""


class SingularityError(GeometryError):
    """Pair separation below the near-field cutoff; couplings diverge."""


class ToleranceError(DickesimError):
    """Adaptive integrator failed to meet tolerances (step underflow)."""


class InvariantViolationError(DickesimError):
    """Density-matrix invariant (trace, Hermiticity, positivity) drifted
    beyond its allowed bound during a run."""


class EnsembleError(DickesimError):
    """Too many realizations of an ensemble failed."""


class AnalysisError(DickesimError):
    """Decay-analysis precondition not met (window/sample problems)."""
