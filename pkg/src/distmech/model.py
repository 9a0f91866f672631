"""Agent utilities and the two centralized allocation problems.

Every utility is strictly concave with curvature inside the band
``(-eta, -1/eta)``. Utilities expose value, first and second derivative and
the inverse of the first derivative; quadratic utilities do all four in
closed form, anything else falls back on monotone root-finding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import InvalidRange, InvalidUtility, NoConvergence

ROOT_TOL = 1e-12
ROOT_MAX_ITER = 200
BAND_GRID = np.linspace(-100.0, 100.0, 1001)


def solve_decreasing(
    g: Callable[[float], float],
    start: float = 0.0,
    dg: Callable[[float], float] | None = None,
    tol: float = ROOT_TOL,
    max_iter: int = ROOT_MAX_ITER,
) -> float:
    """Root of a strictly decreasing scalar function.

    Brackets the root by expanding steps from ``start``, then bisects. When
    ``dg`` is given, Newton steps that stay inside the bracket replace the
    bisection midpoint.
    """
    x0 = float(start)
    g0 = g(x0)
    if g0 == 0.0:
        return x0
    step = 1.0
    lo = hi = x0
    # g decreasing: a positive value means the root lies to the right
    for _ in range(max_iter):
        if g0 > 0:
            lo, hi = hi, hi + step
            if g(hi) <= 0:
                break
        else:
            hi, lo = lo, lo - step
            if g(lo) >= 0:
                break
        step *= 2.0
    else:
        raise NoConvergence(f"could not bracket a root starting from {start}")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gx = g(x)
        if gx == 0.0:
            return x
        if gx > 0:
            lo = x
        else:
            hi = x
        if hi - lo <= tol * max(1.0, abs(x)):
            return 0.5 * (lo + hi)
        cand = 0.5 * (lo + hi)
        if dg is not None:
            d = dg(x)
            if d < 0:
                newton = x - gx / d
                if lo < newton < hi:
                    if abs(newton - x) <= tol * max(1.0, abs(x)):
                        return newton
                    cand = newton
        x = cand
    raise NoConvergence(f"root-finder hit {max_iter} iterations (bracket [{lo}, {hi}])")


class Utility(Protocol):
    def value(self, x: float) -> float: ...
    def marginal(self, x: float) -> float: ...
    def curvature(self, x: float) -> float: ...
    def marginal_inv(self, p: float) -> float: ...


@dataclass(frozen=True)
class QuadraticUtility:
    """``v(x) = theta x^2 + sigma x`` with ``theta < 0``."""

    theta: float
    sigma: float

    def __post_init__(self):
        if not self.theta < 0:
            raise InvalidUtility(f"theta must be negative, got {self.theta}")

    def value(self, x):
        return self.theta * x * x + self.sigma * x

    def marginal(self, x):
        return 2.0 * self.theta * x + self.sigma

    def curvature(self, x):
        return 2.0 * self.theta + 0.0 * x

    def marginal_inv(self, p):
        return (p - self.sigma) / (2.0 * self.theta)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "sigma": self.sigma}


@dataclass(frozen=True)
class LogCoshUtility:
    """``v(x) = -a x^2/2 + b x - c log cosh x``; curvature in ``[-(a+c), -a]``.

    A non-quadratic member of the admitted class, used to exercise the
    root-finding paths.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a <= 0 or self.c < 0:
            raise InvalidUtility("need a > 0 and c >= 0")

    def value(self, x):
        ax = abs(x)
        # stable log cosh
        lc = ax + math.log1p(math.exp(-2.0 * ax)) - math.log(2.0)
        return -0.5 * self.a * x * x + self.b * x - self.c * lc

    def marginal(self, x):
        return -self.a * x + self.b - self.c * math.tanh(x)

    def curvature(self, x):
        return -self.a - self.c / math.cosh(x) ** 2 if abs(x) < 350 else -self.a

    def marginal_inv(self, p):
        return solve_decreasing(
            lambda x: self.marginal(x) - p,
            start=(self.b - p) / self.a,
            dg=self.curvature,
        )

    def to_dict(self) -> dict:
        return {"kind": "logcosh", "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class UtilityProfile:
    """Utilities of all agents plus the curvature band parameter ``eta``.

    Construction enforces ``-eta < v'' < -1/eta`` on a sample grid and that
    ``marginal_inv`` undoes ``marginal``.
    """

    utilities: tuple
    eta: float

    def __init__(self, utilities: Sequence, eta: float, grid: np.ndarray | None = None):
        object.__setattr__(self, "utilities", tuple(utilities))
        object.__setattr__(self, "eta", float(eta))
        if self.eta <= 1:
            raise InvalidUtility(f"eta must exceed 1, got {eta}")
        if not self.utilities:
            raise InvalidUtility("empty profile")
        self._validate(BAND_GRID if grid is None else grid)
        object.__setattr__(
            self, "_quad", all(isinstance(u, QuadraticUtility) for u in self.utilities)
        )
        if self._quad:
            object.__setattr__(self, "_theta", np.array([u.theta for u in self.utilities]))
            object.__setattr__(self, "_sigma", np.array([u.sigma for u in self.utilities]))

    def _validate(self, grid):
        lo, hi = -self.eta, -1.0 / self.eta
        for k, u in enumerate(self.utilities):
            if isinstance(u, QuadraticUtility):
                curv = np.array([2.0 * u.theta])
            else:
                curv = np.array([u.curvature(float(x)) for x in grid])
            if not np.all((curv > lo) & (curv < hi)):
                raise InvalidUtility(f"agent {k}: curvature leaves ({lo}, {hi})")
            for x in (-10.0, -1.0, 0.0, 0.5, 3.0, 10.0):
                back = u.marginal_inv(u.marginal(x))
                if abs(back - x) > 1e-8 * max(1.0, abs(x)):
                    raise InvalidUtility(f"agent {k}: marginal_inv inconsistent at x={x}")

    @property
    def n_agents(self) -> int:
        return len(self.utilities)

    @property
    def is_quadratic(self) -> bool:
        return self._quad

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    @property
    def sigma(self) -> np.ndarray:
        return self._sigma

    # vectorized per-agent evaluation: argument k goes to agent k
    def value(self, x) -> np.ndarray:
        x = np.broadcast_to(np.asarray(x, dtype=float), (self.n_agents,))
        if self.is_quadratic:
            return self._theta * x * x + self._sigma * x
        return np.array([u.value(float(v)) for u, v in zip(self.utilities, x)])

    def marginal(self, x) -> np.ndarray:
        x = np.broadcast_to(np.asarray(x, dtype=float), (self.n_agents,))
        if self.is_quadratic:
            return 2.0 * self._theta * x + self._sigma
        return np.array([u.marginal(float(v)) for u, v in zip(self.utilities, x)])

    def curvature(self, x) -> np.ndarray:
        x = np.broadcast_to(np.asarray(x, dtype=float), (self.n_agents,))
        if self.is_quadratic:
            return 2.0 * self._theta + 0.0 * x
        return np.array([u.curvature(float(v)) for u, v in zip(self.utilities, x)])

    def marginal_inv(self, p) -> np.ndarray:
        p = np.broadcast_to(np.asarray(p, dtype=float), (self.n_agents,))
        if self.is_quadratic:
            return (p - self._sigma) / (2.0 * self._theta)
        return np.array([u.marginal_inv(float(v)) for u, v in zip(self.utilities, p)])

    def to_dict(self) -> dict:
        return {"eta": self.eta, "agents": [u.to_dict() for u in self.utilities]}

    @classmethod
    def from_dict(cls, data: dict) -> "UtilityProfile":
        agents = []
        for a in data["agents"]:
            if a.get("kind", "quadratic") == "logcosh":
                agents.append(LogCoshUtility(a["a"], a["b"], a["c"]))
            else:
                agents.append(QuadraticUtility(float(a["theta"]), float(a["sigma"])))
        return cls(agents, data["eta"])


def save_profile(profile: UtilityProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2))


def load_profile(path: str | Path) -> UtilityProfile:
    return UtilityProfile.from_dict(json.loads(Path(path).read_text()))


def sample_quadratic_profile(
    n_agents: int,
    eta: float,
    theta_range: tuple[float, float] | None = None,
    sigma_range: tuple[float, float] = (10.0, 20.0),
    seed: int = 0,
) -> UtilityProfile:
    """Quadratic profile with uniform ``theta`` and ``sigma`` draws.

    ``theta_range`` defaults to the full band ``(-eta/2, -1/(2 eta))``.
    """
    band = (-eta / 2.0, -1.0 / (2.0 * eta))
    if theta_range is None:
        theta_range = band
    t_lo, t_hi = sorted(map(float, theta_range))
    if t_lo < band[0] or t_hi > band[1]:
        raise InvalidRange(f"theta range {theta_range} leaves the band {band}")
    s_lo, s_hi = sorted(map(float, sigma_range))
    rng = np.random.default_rng(seed)
    theta = rng.uniform(t_lo, t_hi, n_agents)
    sigma = rng.uniform(s_lo, s_hi, n_agents)
    # uniform() is half-open; keep the draw strictly inside the band
    theta = np.clip(theta, np.nextafter(band[0], 0.0), np.nextafter(band[1], -np.inf))
    return UtilityProfile([QuadraticUtility(float(a), float(b)) for a, b in zip(theta, sigma)], eta)


@dataclass(frozen=True)
class EfficientSolution:
    """Efficient allocation and optimal duals.

    Private goods: ``allocation`` has one entry per agent and ``duals`` is the
    scalar price. Public goods: ``allocation`` is the scalar common level and
    ``duals`` holds the personalized prices.
    """

    allocation: np.ndarray | float
    duals: np.ndarray | float


def solve_private(profile: UtilityProfile, capacity: float) -> EfficientSolution:
    """Maximize total utility subject to ``sum x_i = capacity``."""
    if profile.is_quadratic:
        inv = 1.0 / (2.0 * profile.theta)
        # sum_i (lam - sigma_i) / (2 theta_i) = capacity
        lam = (capacity + np.sum(profile.sigma * inv)) / np.sum(inv)
    else:
        # total demand sum_i (v_i')^-1(p) decreases in the price
        lam = solve_decreasing(
            lambda p: float(np.sum(profile.marginal_inv(p))) - capacity,
            start=float(np.mean(profile.marginal(capacity / profile.n_agents))),
        )
    x = profile.marginal_inv(lam)
    return EfficientSolution(allocation=x, duals=float(lam))


def solve_public(profile: UtilityProfile) -> EfficientSolution:
    """Maximize total utility over a single shared level."""
    if profile.is_quadratic:
        x = -np.sum(profile.sigma) / np.sum(2.0 * profile.theta)
    else:
        x = solve_decreasing(
            lambda z: float(np.sum(profile.marginal(z))),
            dg=lambda z: float(np.sum(profile.curvature(z))),
        )
    mu = profile.marginal(x)
    return EfficientSolution(allocation=float(x), duals=mu)


def kkt_residual_private(profile: UtilityProfile, capacity: float, sol: EfficientSolution) -> float:
    x = np.asarray(sol.allocation)
    return max(abs(float(np.sum(x)) - capacity), float(np.max(np.abs(profile.marginal(x) - sol.duals))))


def kkt_residual_public(profile: UtilityProfile, sol: EfficientSolution) -> float:
    mu = np.asarray(sol.duals)
    return max(abs(float(np.sum(mu))), float(np.max(np.abs(profile.marginal(sol.allocation) - mu))))
