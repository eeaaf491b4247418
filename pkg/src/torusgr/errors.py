"""Exception hierarchy for the torus evolution code.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures (non-finite fields, stability violations, solver
breakdowns) exit 3, acceptance-suite failures exit 4.
"""

from __future__ import annotations


class TorusGrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TorusGrError):
    """Malformed or inconsistent run configuration."""


class RecipeError(ConfigError):
    """Initial-data recipe cannot be realized (bad modes, degenerate anisotropy)."""


class NonFiniteFieldError(TorusGrError):
    """A field contains NaN or Inf."""

    def __init__(self, where: str, t: float | None = None):
        self.where = where
        self.t = t
        msg = f"non-finite values in {where}"
        if t is not None:
            msg += f" at t={t:.6g}"
        super().__init__(msg)


class LapseNonPositiveError(TorusGrError):
    """The lapse 1 + n_hat dropped to zero or below somewhere."""

    def __init__(self, min_lapse: float, t: float | None = None):
        self.min_lapse = min_lapse
        self.t = t
        msg = f"lapse not positive (min 1+n_hat = {min_lapse:.6g})"
        if t is not None:
            msg += f" at t={t:.6g}"
        super().__init__(msg)


class StabilityViolationError(TorusGrError):
    """A field magnitude grew by more than 10x within a single step."""

    def __init__(self, component: str, t: float, before: float, after: float):
        self.component = component
        self.t = t
        super().__init__(
            f"stability violation in {component} at t={t:.6g}: "
            f"max |field| grew {before:.3e} -> {after:.3e} in one step"
        )


class NoConvergenceError(TorusGrError):
    """An iterative solver did not reach its tolerance."""


class NonPositivePhiError(TorusGrError):
    """The conformal factor lost positivity during the elliptic solve."""


class SingularFrameError(TorusGrError):
    """The spatial frame matrix is (numerically) singular at some point."""


class WindowTooEarlyError(TorusGrError):
    """Asymptotic extraction attempted before the leading orders dominate."""


class InsufficientSamplesError(TorusGrError):
    """Not enough samples inside the requested fit window."""


class NonPositiveValueError(TorusGrError):
    """Log-linear fitting requires strictly positive series values."""
