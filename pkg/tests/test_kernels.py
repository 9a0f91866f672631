import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import make_graph

from distmech import PrivateMechanism, build_routing, kernels
from distmech import _kernels_py as ref

compiled = pytest.importorskip("distmech._kernels")


def operands(kind, n, seed=0):
    mech = PrivateMechanism(build_routing(make_graph(kind, n, 2)), 0.93, 5.0, float(n))
    rng = np.random.default_rng(seed)
    return mech, rng.normal(size=n), rng.normal(size=(n, n))


@pytest.mark.parametrize("kind,n", [("tree", 31), ("er", 31), ("cycle", 9), ("tree", 2)])
def test_backends_agree(kind, n):
    mech, y, q = operands(kind, n)
    a = compiled.routed_sum(q, mech._next_hop, mech._weight)
    b = ref.routed_sum(q, mech._next_hop, mech._weight)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-13)
    a = compiled.proxy_targets(y, q, mech._next_hop, mech._direct, mech.xi)
    b = ref.proxy_targets(y, q, mech._next_hop, mech._direct, mech.xi)
    np.testing.assert_array_equal(a, b)


def test_routed_sum_by_loops():
    mech, _, q = operands("er", 12)
    r = mech.routing
    expected = [
        sum(mech._weight[i, j] * q[r.next_hop[i, j], j] for j in range(12) if j != i) for i in range(12)
    ]
    np.testing.assert_allclose(kernels.routed_sum(q, mech._next_hop, mech._weight), expected, atol=1e-13)


def test_non_contiguous_input():
    mech, y, q = operands("tree", 15)
    qt = np.asfortranarray(q)
    np.testing.assert_allclose(
        kernels.routed_sum(qt, mech._next_hop, mech._weight), kernels.routed_sum(q, mech._next_hop, mech._weight)
    )


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, DISTMECH_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import distmech; print(distmech.BACKEND)"], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "python"
