"""Exception families used across the toolkit.

Each family maps to one CLI exit-code class (see cli.EXIT_CODES).
"""


class WheelTrapError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WheelTrapError):
    """Malformed or contradictory run configuration."""


class ParameterError(WheelTrapError):
    """Invalid physical or numerical parameter; message names the field."""


class ResolutionError(ParameterError):
    """Mesh resolution incompatible with the geometry."""


class SolverError(WheelTrapError):
    """Linear-system failure (singular or ill-conditioned)."""


class ResourceError(SolverError):
    """Problem size above the configured cap."""


class DomainError(WheelTrapError):
    """Field evaluation requested inside a conductor."""


class FitError(WheelTrapError):
    """Least-squares fit failed or is ill-conditioned."""


class ConfinementError(FitError):
    """Negative curvature: the potential is anti-confining on this axis."""


class UnderResolvedError(FitError):
    """Trace does not resolve a full oscillation; fitting refused."""


class OptimizationError(WheelTrapError):
    """Minimizer or root solver did not converge; message carries a trace."""


class BracketError(OptimizationError):
    """Root bracketing interval contains no sign change."""


class StabilityError(WheelTrapError):
    """Unstable resonator geometry or ion-chain configuration."""


class RegimeError(WheelTrapError):
    """Inputs outside the validity regime of the model."""
