"""Exception types raised across the package."""


class DistMechError(Exception):
    """Base class for all package errors."""


class NotStronglyConnected(DistMechError, ValueError):
    """Some agent cannot reach some other agent along directed edges."""


class InvalidRange(DistMechError, ValueError):
    """A sampling range falls outside the admissible curvature band."""


class InvalidUtility(DistMechError, ValueError):
    """A utility violates the curvature band or derivative-inverse contract."""


class NoConvergence(DistMechError, RuntimeError):
    """A scalar root-finder exhausted its iteration cap."""


class TuningFailed(DistMechError, RuntimeError):
    """No contraction parameter on the search grid certifies the bound."""


class Diverged(DistMechError, RuntimeError):
    """A learning run moved away from equilibrium past the guard."""


class InsufficientData(DistMechError, ValueError):
    """Too few usable rounds to fit a convergence rate."""
