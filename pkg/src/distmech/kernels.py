"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``DISTMECH_PURE_PYTHON=1`` to force the numpy path.
"""

import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("DISTMECH_PURE_PYTHON"):
        raise ImportError("pure python requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def routed_sum(q, next_hop, weight):
    return _impl.routed_sum(np.ascontiguousarray(q, dtype=np.float64), next_hop, weight)


def proxy_targets(y, q, next_hop, direct, xi):
    return _impl.proxy_targets(
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(q, dtype=np.float64),
        next_hop,
        direct,
        float(xi),
    )
