"""Choosing ``(xi, delta)`` so the best-response map is a contraction.

For each agent the row-sum bound on its best-response Jacobian reduces to a
ratio ``C_i / D_i`` of two graph-dependent sums. Driving ``xi`` towards 1
sends every ``D_i`` to zero while ``C_i`` stays bounded away from zero, so
any curvature band ``eta`` can be accommodated: pick ``xi`` with
``eta^2 < min_i |C_i / D_i|`` and set ``delta`` from the square root of that
minimum. :func:`certify_contraction` checks the result independently from a
finite-difference Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import TuningFailed
from .graph import RoutingTable
from .mech_private import PrivateMechanism
from .mech_public import PublicMechanism
from .mechanism import MessageProfile, RoutedMechanism
from .model import UtilityProfile

Problem = Literal["private", "public"]

DEFAULT_MARGIN = 0.1
MAX_DECADE = 15
REFINE_STEPS = 60


@dataclass(frozen=True)
class ContractionBounds:
    c_vals: np.ndarray
    d_vals: np.ndarray
    ratio_min: float


@dataclass(frozen=True)
class TunedParams:
    xi: float
    delta: float
    certificate: ContractionBounds
    eta_used: float
    problem: str

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "xi": self.xi,
            "one_minus_xi": 1.0 - self.xi,
            "delta": self.delta,
            "ratio_min": self.certificate.ratio_min,
            "eta": self.eta_used,
        }


def _routed_weight_sums(routing: RoutingTable, xi: float) -> np.ndarray:
    # sum over r != i of 1/xi for neighbors and 1/xi^(d-1) beyond
    expo = np.maximum(routing.dist - 1, 1).astype(float)
    w = xi ** (-expo)
    np.fill_diagonal(w, 0.0)
    return w.sum(axis=1)


def _kappa(routing: RoutingTable, xi: float) -> np.ndarray:
    # xi on the designated slot; xi^d(n(i,i), i) when that link is one-way
    return xi ** routing.return_dist.astype(float)


def bounds_private(routing: RoutingTable, xi: float) -> ContractionBounds:
    n = routing.n_agents
    s = _routed_weight_sums(routing, xi)
    c = np.abs(1.0 / _kappa(routing, xi) - s)
    d = np.abs((n - 1) - s)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d > 0, c / d, np.inf)
    return ContractionBounds(c, d, float(np.min(ratio)))


def bounds_public(routing: RoutingTable, xi: float) -> ContractionBounds:
    n = routing.n_agents
    c = 1.0 + _routed_weight_sums(routing, xi)
    far = ~routing.neighbor_mask & ~np.eye(n, dtype=bool)
    far_sum = np.where(far, xi ** (-(routing.dist - 2.0)), 0.0).sum(axis=1)
    n_far = far.sum(axis=1)
    kap = _kappa(routing, xi)
    d = (far_sum - n_far) / xi + (n - 1) * (1.0 / xi - 1.0 / kap) + n * kap * (1.0 - kap)
    # a nonpositive D_i leaves agent i's row unconstrained
    with np.errstate(divide="ignore"):
        ratio = np.where(d > 0, c / d, np.inf)
    return ContractionBounds(c, d, float(np.min(ratio)))


def _bounds(problem: Problem, routing, xi):
    return bounds_private(routing, xi) if problem == "private" else bounds_public(routing, xi)


def _delta_for(problem: Problem, n: int, ratio: float) -> float:
    if problem == "private":
        return (n - 1) * math.sqrt(ratio)
    return math.sqrt(ratio) / n


def tune(
    routing: RoutingTable,
    eta: float,
    problem: Problem,
    margin: float = DEFAULT_MARGIN,
    refine: bool = True,
    max_decade: int = MAX_DECADE,
) -> TunedParams:
    """Smallest-decade ``xi = 1 - 10^-t`` passing ``ratio > eta^2 (1 + margin)``.

    With ``refine`` the gap ``1 - xi`` is then widened by bisection (in
    log scale) towards the last failing decade, which keeps the certified
    inequality but lowers ``delta`` and so speeds up learning. The returned
    point always passes the test.
    """
    if problem not in ("private", "public"):
        raise ValueError(f"unknown problem {problem!r}")
    if eta <= 1:
        raise ValueError("eta must exceed 1")
    n = routing.n_agents
    target = eta**2 * (1.0 + margin)
    # public: every kappa_i = xi^d(n(i,i), i) must exceed sqrt((N-1)/N)
    e_max = int(routing.return_dist.max())
    xi_floor = ((n - 1) / n) ** (0.5 / e_max) if problem == "public" else 0.0

    def passes(xi):
        b = _bounds(problem, routing, xi)
        return b.ratio_min > target, b

    failing_exp = None
    for t in range(1, max_decade + 1):
        xi = 1.0 - 10.0**-t
        if xi <= xi_floor:
            continue
        ok, b = passes(xi)
        if ok:
            break
        failing_exp = -(t)
    else:
        raise TuningFailed(f"no xi = 1 - 10^-t, t <= {max_decade}, reaches eta^2 (1+margin) = {target:g}")
    if not math.isfinite(b.ratio_min):
        raise TuningFailed("contraction ratio is unbounded for every agent; delta is undetermined")

    if refine and failing_exp is not None:
        lo, hi = -float(t), float(failing_exp)  # log10(1 - xi): lo passes, hi fails
        for _ in range(REFINE_STEPS):
            mid = 0.5 * (lo + hi)
            ok_mid, b_mid = passes(1.0 - 10.0**mid)
            if ok_mid:
                lo, b = mid, b_mid
            else:
                hi = mid
        xi = 1.0 - 10.0**lo
    return TunedParams(xi, _delta_for(problem, n, b.ratio_min), b, float(eta), problem)


def build_mechanism(routing: RoutingTable, params: TunedParams, capacity: float | None = None) -> RoutedMechanism:
    if params.problem == "private":
        if capacity is None:
            raise ValueError("the private mechanism needs a capacity")
        return PrivateMechanism(routing, params.xi, params.delta, capacity)
    return PublicMechanism(routing, params.xi, params.delta)


# ---------------------------------------------------------------------------
# finite-difference certificates
# ---------------------------------------------------------------------------


def best_response_jacobian(
    mech: RoutedMechanism, profile: UtilityProfile, m: MessageProfile, step: float = 1e-5
) -> np.ndarray:
    """Central-difference Jacobian of the full best-response map.

    Rows and columns use the agent-major flat layout of
    :meth:`MessageProfile.flat`.
    """
    n = mech.n_agents
    v = m.flat()
    jac = np.empty((v.size, v.size))
    for k in range(v.size):
        vp = v.copy()
        vm = v.copy()
        vp[k] += step
        vm[k] -= step
        fp = mech.best_response_map(profile, MessageProfile.from_flat(vp, n)).flat()
        fm = mech.best_response_map(profile, MessageProfile.from_flat(vm, n)).flat()
        jac[:, k] = (fp - fm) / (2.0 * step)
    return jac


def demand_index(n: int, i: int) -> int:
    return i * (n + 1)


def proxy_index(n: int, owner: int, target: int) -> int:
    return owner * (n + 1) + 1 + target


def designated_entries(jac: np.ndarray, mech: RoutedMechanism) -> np.ndarray:
    """``d y_i / d q_{n(i,i)}^i`` for every agent, read off a Jacobian."""
    n = mech.n_agents
    des = mech.routing.designated
    return np.array([jac[demand_index(n, i), proxy_index(n, int(des[i]), i)] for i in range(n)])


@dataclass(frozen=True)
class ContractionCertificate:
    norm: float
    is_contraction: bool
    min_entry: float
    probe_spread: float
    jacobian: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "is_contraction": self.is_contraction,
            "min_entry": self.min_entry,
            "probe_spread": self.probe_spread,
        }


def certify_contraction(
    mech: RoutedMechanism,
    profile: UtilityProfile,
    n_probe_points: int = 3,
    step: float = 1e-5,
    seed: int = 0,
) -> ContractionCertificate:
    """Row-sum norm of the best-response Jacobian at random probe messages."""
    n = mech.n_agents
    jacs = [
        best_response_jacobian(mech, profile, MessageProfile.random(n, seed + k), step)
        for k in range(n_probe_points)
    ]
    norm = max(float(np.max(np.sum(np.abs(j), axis=1))) for j in jacs)
    spread = max(float(np.max(np.abs(j - jacs[0]))) for j in jacs)
    return ContractionCertificate(
        norm=norm,
        is_contraction=norm < 1.0,
        min_entry=min(float(j.min()) for j in jacs),
        probe_spread=spread,
        jacobian=jacs[0],
    )


# ---------------------------------------------------------------------------
# analytic demand sensitivities
# ---------------------------------------------------------------------------


def _off_diag_weights(mech: RoutedMechanism) -> np.ndarray:
    return mech._weight


def private_demand_sensitivities(mech: PrivateMechanism, profile: UtilityProfile, m: MessageProfile) -> np.ndarray:
    """``G[i, r] = d y_i / d q_{n(i,r)}^r``; the diagonal is the designated entry."""
    n, delta = mech.n_agents, mech.delta
    p = mech.price(m)
    curv = profile.curvature(profile.marginal_inv(p))
    w = _off_diag_weights(mech)
    g = w * (1.0 / (n - 1) + 1.0 / (delta * curv))[:, None]
    g[np.arange(n), np.arange(n)] = 1.0 / (delta * mech.kappa * curv)
    return g


def public_demand_sensitivities(mech: PublicMechanism, profile: UtilityProfile, m: MessageProfile) -> np.ndarray:
    n, kap, delta = mech.n_agents, mech.kappa, mech.delta
    y_br = mech.best_response_demand(profile, m)
    curv = profile.curvature((y_br + mech.routed_sum(m.q)) / n)
    den = curv / n**2 - delta * kap**2
    w = _off_diag_weights(mech)
    g = w * ((-delta / n - curv / n**2) / den)[:, None]
    g[np.arange(n), np.arange(n)] = (delta * (n - 1) / (n * kap) - delta * kap) / den
    return g
