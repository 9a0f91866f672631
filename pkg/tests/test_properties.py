"""Randomized property checks over graphs, profiles and messages."""

import numpy as np
from conftest import floyd_warshall
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from distmech import (
    MessageProfile,
    build_mechanism,
    build_routing,
    check_strong_connectivity,
    gen_directed_cycle,
    sample_quadratic_profile,
    tune,
)
from distmech import _kernels_py as ref
from distmech import kernels
from distmech.graph import Graph

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def strong_graphs(draw, max_n=8):
    """A directed Hamiltonian cycle plus random chords, relabelled."""
    n = draw(st.integers(2, max_n))
    perm = draw(st.permutations(range(n)))
    edges = {(perm[k], perm[(k + 1) % n]) for k in range(n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges |= {(i, j) for i, j in extra if i != j}
    return Graph(n, sorted(edges))


@SETTINGS
@given(strong_graphs())
def test_routing_matches_oracle(g):
    assert check_strong_connectivity(g)
    r = build_routing(g)
    np.testing.assert_array_equal(r.dist, floyd_warshall(g.n_agents, g.edges))
    for i in range(g.n_agents):
        for j in range(g.n_agents):
            if i != j:
                assert r.dist[r.next_hop[i, j], j] == r.dist[i, j] - 1


@SETTINGS
@given(strong_graphs(max_n=7), st.integers(0, 2**31 - 1), st.sampled_from(["private", "public"]))
def test_equilibrium_audits(g, seed, problem):
    if g.n_agents < 3:
        g = gen_directed_cycle(3)
    r = build_routing(g)
    prof = sample_quadratic_profile(g.n_agents, 25.0, seed=seed)
    mech = build_mechanism(r, tune(r, 25.0, problem), float(g.n_agents))
    m = mech.nash_equilibrium(prof)
    audit = mech.audit_equilibrium(prof, m)
    assert audit.max() < 1e-8


@SETTINGS
@given(strong_graphs(), st.integers(0, 2**31 - 1), st.floats(0.5, 0.999))
def test_kernel_backends_agree(g, seed, xi):
    r = build_routing(g)
    n = g.n_agents
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, n))
    y = rng.normal(size=n)
    nh = np.ascontiguousarray(r.next_hop, dtype=np.int64)
    w = xi ** -np.maximum(r.dist - 1, 1).astype(float)
    np.fill_diagonal(w, 0.0)
    direct = (r.neighbor_mask | np.eye(n, dtype=bool)).astype(np.uint8)
    np.testing.assert_allclose(kernels.routed_sum(q, nh, w), ref.routed_sum(q, nh, w), atol=1e-12)
    np.testing.assert_array_equal(kernels.proxy_targets(y, q, nh, direct, xi), ref.proxy_targets(y, q, nh, direct, xi))


@SETTINGS
@given(st.integers(3, 8), st.integers(0, 10_000))
def test_flat_layout_round_trip(n, seed):
    m = MessageProfile.random(n, seed)
    back = MessageProfile.from_flat(m.flat(), n)
    np.testing.assert_array_equal(back.y, m.y)
    np.testing.assert_array_equal(back.q, m.q)
