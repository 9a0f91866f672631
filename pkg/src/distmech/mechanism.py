"""Message profiles and the machinery shared by both mechanisms.

Each agent ``i`` sends ``m_i = (y_i, q_i)``: a scalar ``y_i`` and a proxy row
``q_i`` with one entry per agent. Agent ``i``'s allocation and tax read only
its own message and those of its out-neighbors; far-away demands reach ``i``
through chains of proxies along shortest paths, each hop scaled by ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import RoutingTable
from .model import UtilityProfile


@dataclass(frozen=True)
class MessageProfile:
    y: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        q = np.asarray(self.q, dtype=float)
        n = y.shape[0]
        if y.ndim != 1 or q.shape != (n, n):
            raise ValueError(f"expected y of shape (N,) and q of shape (N, N), got {y.shape}, {q.shape}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(q))):
            raise ValueError("message entries must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "q", q)

    @property
    def n_agents(self) -> int:
        return self.y.shape[0]

    def flat(self) -> np.ndarray:
        """Agent-major vector ``(y_0, q_0, y_1, q_1, ...)``."""
        return np.concatenate([self.y[:, None], self.q], axis=1).ravel()

    @classmethod
    def from_flat(cls, v: np.ndarray, n_agents: int) -> "MessageProfile":
        block = np.asarray(v, dtype=float).reshape(n_agents, n_agents + 1)
        return cls(block[:, 0].copy(), block[:, 1:].copy())

    @classmethod
    def zeros(cls, n_agents: int) -> "MessageProfile":
        return cls(np.zeros(n_agents), np.zeros((n_agents, n_agents)))

    @classmethod
    def random(cls, n_agents: int, seed: int, low: float = -1.0, high: float = 1.0) -> "MessageProfile":
        rng = np.random.default_rng(seed)
        return cls.from_flat(rng.uniform(low, high, n_agents * (n_agents + 1)), n_agents)

    def with_agent(self, i: int, y_i: float, q_i: np.ndarray) -> "MessageProfile":
        y = self.y.copy()
        q = self.q.copy()
        y[i] = y_i
        q[i] = q_i
        return MessageProfile(y, q)


@dataclass(frozen=True)
class Outcome:
    allocation: np.ndarray
    prices: np.ndarray
    taxes: np.ndarray
    utilities: np.ndarray


@dataclass(frozen=True)
class EquilibriumAudit:
    """Residuals of the equilibrium conditions at a message.

    ``alloc_residual``: private, ``|sum x - c|``; public, largest deviation
    of an agent's allocation from the mean allocation.
    ``price_residual``: largest ``|v_i'(x_i) - p_i|``; for public goods also
    covers ``|sum p_i|``.
    ``budget_residual``: ``|sum t_i|``.
    ``foc_residual``: sup-norm distance between the message and its best
    response.
    """

    alloc_residual: float
    price_residual: float
    budget_residual: float
    foc_residual: float

    def max(self) -> float:
        return max(self.alloc_residual, self.price_residual, self.budget_residual, self.foc_residual)

    def to_dict(self) -> dict:
        return {
            "alloc_residual": self.alloc_residual,
            "price_residual": self.price_residual,
            "budget_residual": self.budget_residual,
            "foc_residual": self.foc_residual,
        }


class RoutedMechanism:
    """Common state and proxy bookkeeping for the two mechanisms."""

    def __init__(self, routing: RoutingTable, xi: float, delta: float):
        if not 0.0 < xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {xi}")
        if not delta > 0.0:
            raise ValueError(f"delta must be positive, got {delta}")
        self.routing = routing
        self.xi = float(xi)
        self.delta = float(delta)
        n = routing.n_agents
        self.n_agents = n
        self._next_hop = np.ascontiguousarray(routing.next_hop, dtype=np.int64)
        # neighbors sit one hop away but are discounted like two-hop targets;
        # every off-diagonal target r carries 1 / xi^max(d(i,r) - 1, 1)
        expo = np.maximum(routing.dist - 1, 1).astype(float)
        w = self.xi ** (-expo)
        np.fill_diagonal(w, 0.0)
        self._weight = np.ascontiguousarray(w)
        direct = routing.neighbor_mask | np.eye(n, dtype=bool)
        self._direct = np.ascontiguousarray(direct.astype(np.uint8))
        self._cols = np.arange(n)
        self._designated = np.asarray(routing.designated)
        # the designated neighbor's proxy of i sits d(n(i,i), i) hops down the
        # cascade, so at equilibrium it equals kappa_i * y_i
        self.kappa = self.xi ** routing.return_dist.astype(float)

    # -- proxy plumbing ----------------------------------------------------
    def routed_sum(self, q: np.ndarray) -> np.ndarray:
        """Per agent, the xi-rescaled proxies of every other agent's demand."""
        return kernels.routed_sum(q, self._next_hop, self._weight)

    def designated_proxy(self, q: np.ndarray) -> np.ndarray:
        """Per agent ``i``, the designated neighbor's proxy of ``i``."""
        return q[self._designated, self._cols]

    def proxy_targets(self, m: MessageProfile) -> np.ndarray:
        return kernels.proxy_targets(m.y, m.q, self._next_hop, self._direct, self.xi)

    def proxy_penalty(self, m: MessageProfile) -> np.ndarray:
        return np.sum((m.q - self.proxy_targets(m)) ** 2, axis=1)

    def consensus_message(self, y: np.ndarray) -> MessageProfile:
        """Message whose proxies replicate ``y`` along shortest paths."""
        y = np.asarray(y, dtype=float)
        q = self.xi ** self.routing.dist.astype(float) * y[None, :]
        np.fill_diagonal(q, self.xi * y)
        return MessageProfile(y, q)

    # -- subclass hooks ----------------------------------------------------
    def allocate(self, m: MessageProfile) -> np.ndarray:
        raise NotImplementedError

    def price(self, m: MessageProfile, i: int | None = None):
        raise NotImplementedError

    def tax(self, m: MessageProfile, i: int | None = None):
        raise NotImplementedError

    def best_response_demand(self, profile: UtilityProfile, m: MessageProfile) -> np.ndarray:
        raise NotImplementedError

    # -- derived -----------------------------------------------------------
    def induced_utility(self, profile: UtilityProfile, m: MessageProfile, i: int | None = None):
        u = profile.value(self.allocate(m)) - self.tax(m)
        return u if i is None else float(u[i])

    def outcome(self, profile: UtilityProfile, m: MessageProfile) -> Outcome:
        x = self.allocate(m)
        t = self.tax(m)
        return Outcome(x, self.price(m), t, profile.value(x) - t)

    def best_response_map(self, profile: UtilityProfile, m: MessageProfile) -> MessageProfile:
        """Every agent's best response to ``m``, computed simultaneously."""
        y_new = self.best_response_demand(profile, m)
        q_new = self.proxy_targets(m)
        q_new[self._cols, self._cols] = self.xi * y_new
        return MessageProfile(y_new, q_new)

    def best_response(self, profile: UtilityProfile, m: MessageProfile, i: int) -> tuple[float, np.ndarray]:
        """Agent ``i``'s unique maximizer ``(y_i, q_i)`` of its induced utility."""
        br = self.best_response_map(profile, m)
        return float(br.y[i]), br.q[i].copy()

    def foc_residual(self, profile: UtilityProfile, m: MessageProfile) -> float:
        return float(np.max(np.abs(self.best_response_map(profile, m).flat() - m.flat())))


class SeparableMechanism:
    """Several goods (or features) run as independent single-good instances.

    Utilities must be separable across goods: good ``k`` is played with
    ``profiles[k]`` on ``mechanisms[k]``, messages are per good, and an
    agent's total tax is the sum of its per-good taxes.
    """

    def __init__(self, mechanisms, profiles):
        if len(mechanisms) != len(profiles):
            raise ValueError("one profile per good")
        self.mechanisms = list(mechanisms)
        self.profiles = list(profiles)

    def allocate(self, messages) -> np.ndarray:
        return np.stack([mech.allocate(m) for mech, m in zip(self.mechanisms, messages)], axis=1)

    def tax(self, messages) -> np.ndarray:
        return sum(mech.tax(m) for mech, m in zip(self.mechanisms, messages))

    def best_response_map(self, messages):
        return [mech.best_response_map(p, m) for mech, p, m in zip(self.mechanisms, self.profiles, messages)]

    def nash_equilibrium(self):
        return [mech.nash_equilibrium(p) for mech, p in zip(self.mechanisms, self.profiles)]
