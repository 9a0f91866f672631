"""Shared fixtures and independent numerical oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from distmech import (
    MessageProfile,
    QuadraticUtility,
    UtilityProfile,
    build_mechanism,
    build_routing,
    gen_directed_cycle,
    gen_erdos_renyi,
    gen_full_binary_tree,
    sample_quadratic_profile,
    tune,
)

ETA = 25.0
HESSIAN_STEP = 1e-3


# ---------------------------------------------------------------------------
# graph oracles
# ---------------------------------------------------------------------------


def floyd_warshall(n, edges):
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for i, j in edges:
        d[i, j] = 1.0
    for k, i, j in itertools.product(range(n), repeat=3):
        if d[i, k] + d[k, j] < d[i, j]:
            d[i, j] = d[i, k] + d[k, j]
    return d


def make_graph(kind: str, n: int, seed: int = 1):
    if kind == "tree":
        return gen_full_binary_tree(n)
    if kind == "cycle":
        return gen_directed_cycle(n)
    if kind == "er":
        return gen_erdos_renyi(n, 0.3, seed)
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# finite differences and a numerical maximizer
# ---------------------------------------------------------------------------


def fd_gradient(f, x, h=1e-5):
    g = np.empty_like(x)
    for a in range(x.size):
        e = np.zeros_like(x)
        e[a] = h
        g[a] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_hessian(f, x, h=HESSIAN_STEP):
    k = x.size
    H = np.empty((k, k))
    eye = np.eye(k) * h
    for a in range(k):
        for b in range(a, k):
            ea, eb = eye[a], eye[b]
            v = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * h * h)
            H[a, b] = H[b, a] = v
    return H


def numeric_maximize(f, x0, iters=50, tol=1e-12):
    """Damped Newton ascent driven only by finite differences of ``f``."""
    x = np.array(x0, dtype=float)
    for _ in range(iters):
        g = fd_gradient(f, x)
        H = fd_hessian(f, x)
        step = -np.linalg.solve(H, g)
        t = 1.0
        fx = f(x)
        while f(x + t * step) < fx - 1e-12 and t > 1e-8:
            t *= 0.5
        x = x + t * step
        if np.max(np.abs(t * step)) < tol:
            break
    return x


def agent_utility(mech, profile, m: MessageProfile, i: int):
    """``u_i`` as a function of agent ``i``'s own message vector."""

    def f(z):
        return mech.induced_utility(profile, m.with_agent(i, z[0], z[1:]), i)

    return f


def own_message(m: MessageProfile, i: int) -> np.ndarray:
    return np.concatenate([[m.y[i]], m.q[i]])


def grid_argmax(f, lo, hi, points=201, levels=12, vectorized=False):
    """Coarse-to-fine exhaustive grid search over a box (any dimension).

    With ``vectorized`` the objective takes the whole ``(points, dim)`` mesh.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    best = None
    for _ in range(levels):
        axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
        vals = f(mesh) if vectorized else np.array([f(p) for p in mesh])
        best = mesh[int(np.argmax(vals))]
        width = (hi - lo) / (points - 1)
        lo, hi = best - 2 * width, best + 2 * width
    return best


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def tuned_instance(problem, kind, n, seed=0, graph_seed=1, eta=ETA):
    routing = build_routing(make_graph(kind, n, graph_seed))
    profile = sample_quadratic_profile(n, eta, seed=seed)
    params = tune(routing, eta, problem)
    mech = build_mechanism(routing, params, float(n))
    return mech, profile, params


@pytest.fixture
def two_agent_profile():
    return UtilityProfile([QuadraticUtility(-1.0, 4.0), QuadraticUtility(-1.0, 2.0)], eta=ETA)


@pytest.fixture(scope="session")
def std_private_tree():
    return tuned_instance("private", "tree", 31)


@pytest.fixture(scope="session")
def std_public_er():
    return tuned_instance("public", "er", 31)


# ---------------------------------------------------------------------------
# acceptance reporting
# ---------------------------------------------------------------------------

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
