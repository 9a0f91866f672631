"""Pure-numpy kernels for the routed proxy sums.

For agent ``i`` and target ``r != i`` the mechanism reads the proxy that the
first hop ``n(i, r)`` keeps for ``r``. Two kernels cover every use:

``routed_sum``
    ``S_i = sum_{r != i} w[i, r] * q[n(i, r), r]``.
``proxy_targets``
    ``T[i, r] = xi * y[r]`` where ``direct[i, r]`` (``r == i`` or ``r`` is an
    out-neighbor), else ``xi * q[n(i, r), r]``.
"""

import numpy as np


def routed_sum(q, next_hop, weight):
    gathered = q[next_hop, np.arange(q.shape[1])]
    return np.einsum("ij,ij->i", weight, gathered)


def proxy_targets(y, q, next_hop, direct, xi):
    gathered = q[next_hop, np.arange(q.shape[1])]
    return xi * np.where(direct, y[None, :], gathered)
