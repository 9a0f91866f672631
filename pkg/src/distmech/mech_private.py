"""Distributed Walrasian mechanism for dividing a fixed supply.

For agent ``i`` let ``S_i`` be the routed sum of proxies (see
:meth:`RoutedMechanism.routed_sum`) and ``g_i`` the designated neighbor's proxy
of ``i``. Then

    x_i = y_i - S_i / (N - 1) + c / N
    p_i = (g_i / xi + S_i) / delta
    t_i = p_i (x_i - c / N) + sum_r (q_i^r - T_i^r)^2

where ``T`` are the proxy targets. At a Nash equilibrium all proxies agree
with the demands, allocations are efficient and taxes sum to zero.

When the designated link is not reciprocal (directed graphs), ``g_i / xi``
becomes ``g_i / xi^d(n(i,i), i)`` so that it still recovers ``y_i`` at
equilibrium; on bidirected graphs the two coincide.
"""

from __future__ import annotations

import numpy as np

from .graph import RoutingTable
from .mechanism import EquilibriumAudit, MessageProfile, RoutedMechanism
from .model import EfficientSolution, UtilityProfile, solve_private


class PrivateMechanism(RoutedMechanism):
    def __init__(self, routing: RoutingTable, xi: float, delta: float, capacity: float):
        super().__init__(routing, xi, delta)
        if self.n_agents < 2:
            raise ValueError("the private mechanism needs N >= 2")
        self.capacity = float(capacity)

    def __repr__(self):
        return f"PrivateMechanism(N={self.n_agents}, xi={self.xi!r}, delta={self.delta!r}, capacity={self.capacity!r})"

    def allocate(self, m: MessageProfile) -> np.ndarray:
        n = self.n_agents
        return m.y - self.routed_sum(m.q) / (n - 1) + self.capacity / n

    def price(self, m: MessageProfile, i: int | None = None):
        p = (self.designated_proxy(m.q) / self.kappa + self.routed_sum(m.q)) / self.delta
        return p if i is None else float(p[i])

    def tax(self, m: MessageProfile, i: int | None = None):
        s = self.routed_sum(m.q)
        n = self.n_agents
        p = (self.designated_proxy(m.q) / self.kappa + s) / self.delta
        excess = m.y - s / (n - 1)
        t = p * excess + self.proxy_penalty(m)
        return t if i is None else float(t[i])

    def best_response_demand(self, profile: UtilityProfile, m: MessageProfile) -> np.ndarray:
        # choose y_i so that the allocation meets marginal utility = own price
        n = self.n_agents
        s = self.routed_sum(m.q)
        p = (self.designated_proxy(m.q) / self.kappa + s) / self.delta
        return profile.marginal_inv(p) + s / (n - 1) - self.capacity / n

    def equilibrium_demand(self, sol: EfficientSolution) -> np.ndarray:
        n = self.n_agents
        x = np.asarray(sol.allocation, dtype=float)
        return (n - 1) / n * x + self.delta * sol.duals / n - (n - 1) * self.capacity / n**2

    def nash_equilibrium(self, profile: UtilityProfile, sol: EfficientSolution | None = None) -> MessageProfile:
        """Closed-form equilibrium message built from the efficient solution."""
        if sol is None:
            sol = solve_private(profile, self.capacity)
        return self.consensus_message(self.equilibrium_demand(sol))

    def audit_equilibrium(self, profile: UtilityProfile, m: MessageProfile) -> EquilibriumAudit:
        x = self.allocate(m)
        p = self.price(m)
        return EquilibriumAudit(
            alloc_residual=abs(float(np.sum(x)) - self.capacity),
            price_residual=float(np.max(np.abs(profile.marginal(x) - p))),
            budget_residual=abs(float(np.sum(self.tax(m)))),
            foc_residual=self.foc_residual(profile, m),
        )
