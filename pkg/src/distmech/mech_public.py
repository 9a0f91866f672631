"""Distributed Lindahl mechanism for choosing a shared public-good level.

With ``S_i`` the routed proxy sum and ``g_i`` the designated neighbor's proxy
of ``i``:

    x_i = (y_i + S_i) / N
    p_i = delta (N - 1) g_i / xi - delta S_i
    t_i = p_i x_i + sum_r (q_i^r - T_i^r)^2 + (delta / 2) (g_i - xi y_i)^2

The last tax term only matters for contraction of the best response; it
vanishes at equilibrium. Contraction needs ``xi^2 > (N - 1) / N``.

As in the private mechanism, on directed graphs ``xi`` in the designated
slots (``g_i / xi`` and ``xi y_i`` in the last term) becomes
``kappa_i = xi^d(n(i,i), i)``, and the restriction reads
``kappa_i^2 > (N - 1) / N``.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import RoutingTable
from .mechanism import EquilibriumAudit, MessageProfile, RoutedMechanism
from .model import EfficientSolution, UtilityProfile, solve_decreasing, solve_public


class PublicMechanism(RoutedMechanism):
    def __init__(self, routing: RoutingTable, xi: float, delta: float, strict: bool = True):
        super().__init__(routing, xi, delta)
        n = self.n_agents
        if n < 2:
            raise ValueError("the public mechanism needs N >= 2")
        if strict and not np.all(self.kappa**2 > (n - 1) / n):
            raise ValueError(
                f"xi^d(n(i,i),i) must exceed sqrt((N-1)/N) = {math.sqrt((n - 1) / n):.6f} for every agent, got xi={xi}"
            )

    def __repr__(self):
        return f"PublicMechanism(N={self.n_agents}, xi={self.xi!r}, delta={self.delta!r})"

    def allocate(self, m: MessageProfile) -> np.ndarray:
        return (m.y + self.routed_sum(m.q)) / self.n_agents

    def _price(self, q, s):
        return self.delta * (self.n_agents - 1) * self.designated_proxy(q) / self.kappa - self.delta * s

    def price(self, m: MessageProfile, i: int | None = None):
        p = self._price(m.q, self.routed_sum(m.q))
        return p if i is None else float(p[i])

    def tax(self, m: MessageProfile, i: int | None = None):
        s = self.routed_sum(m.q)
        g = self.designated_proxy(m.q)
        x = (m.y + s) / self.n_agents
        t = self._price(m.q, s) * x + self.proxy_penalty(m) + 0.5 * self.delta * (g - self.kappa * m.y) ** 2
        return t if i is None else float(t[i])

    def best_response_demand(self, profile: UtilityProfile, m: MessageProfile) -> np.ndarray:
        n, kap, delta = self.n_agents, self.kappa, self.delta
        s = self.routed_sum(m.q)
        g = self.designated_proxy(m.q)
        p = self._price(m.q, s)
        if profile.is_quadratic:
            # stationarity of (1/N)(v'((y + S)/N) - p) + delta k (g - k y), linear in y
            th, sg = profile.theta, profile.sigma
            return (2.0 * th * s / n**2 + (sg - p) / n + delta * kap * g) / (delta * kap**2 - 2.0 * th / n**2)
        out = np.empty(n)
        for i, u in enumerate(profile.utilities):
            si, gi, pi, ki = s[i], g[i], p[i], kap[i]

            def foc(y, u=u, si=si, gi=gi, pi=pi, ki=ki):
                return (u.marginal((y + si) / n) - pi) / n + delta * ki * (gi - ki * y)

            def dfoc(y, u=u, si=si, ki=ki):
                return u.curvature((y + si) / n) / n**2 - delta * ki**2

            out[i] = solve_decreasing(foc, start=gi / ki, dg=dfoc)
        return out

    def equilibrium_demand(self, sol: EfficientSolution) -> np.ndarray:
        return sol.allocation + np.asarray(sol.duals, dtype=float) / (self.delta * self.n_agents)

    def nash_equilibrium(self, profile: UtilityProfile, sol: EfficientSolution | None = None) -> MessageProfile:
        if sol is None:
            sol = solve_public(profile)
        return self.consensus_message(self.equilibrium_demand(sol))

    def audit_equilibrium(self, profile: UtilityProfile, m: MessageProfile) -> EquilibriumAudit:
        x = self.allocate(m)
        p = self.price(m)
        return EquilibriumAudit(
            alloc_residual=float(np.max(np.abs(x - np.mean(x)))),
            price_residual=max(abs(float(np.sum(p))), float(np.max(np.abs(profile.marginal(x) - p)))),
            budget_residual=abs(float(np.sum(self.tax(m)))),
            foc_residual=self.foc_residual(profile, m),
        )
