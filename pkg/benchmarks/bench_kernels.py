"""Compare the compiled and numpy kernel backends.

Times the two hot kernels directly and the full best-response map, which
is what each learning round calls. Usage::

    python3 benchmarks/bench_kernels.py [--n 31 63 127] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from distmech import (
    MessageProfile,
    build_mechanism,
    build_routing,
    gen_erdos_renyi,
    kernels,
    sample_quadratic_profile,
    tune,
)
from distmech import _kernels_py as numpy_impl

try:
    from distmech import _kernels as cython_impl
except ImportError:
    cython_impl = None


def best_time(fn, repeat: int) -> float:
    """Best per-call time in microseconds."""
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number * 1e6


def bench_size(n: int, repeat: int):
    routing = build_routing(gen_erdos_renyi(n, 0.3, 1))
    mech = build_mechanism(routing, tune(routing, 25.0, "public"), float(n))
    prof = sample_quadratic_profile(n, 25.0, seed=0)
    m = MessageProfile.random(n, 0)
    q = np.ascontiguousarray(m.q)
    y = np.ascontiguousarray(m.y)
    nh, w, direct, xi = mech._next_hop, mech._weight, mech._direct, mech.xi

    impls = {"numpy": numpy_impl}
    if cython_impl is not None:
        impls["cython"] = cython_impl
    rows = {}
    for name, impl in impls.items():
        kernels._impl = impl
        rows[name] = (
            best_time(lambda: impl.routed_sum(q, nh, w), repeat),
            best_time(lambda: impl.proxy_targets(y, q, nh, direct, xi), repeat),
            best_time(lambda: mech.best_response_map(prof, m), repeat),
        )
    kernels._impl = cython_impl if cython_impl is not None else numpy_impl
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[31, 63, 127])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    header = f"{'N':>5} {'backend':>8} {'routed_sum us':>14} {'proxy_targets us':>17} {'best_response us':>17}"
    print(header)
    print("-" * len(header))
    for n in args.n:
        rows = bench_size(n, args.repeat)
        for name, (rs, pt, br) in rows.items():
            print(f"{n:>5} {name:>8} {rs:>14.1f} {pt:>17.1f} {br:>17.1f}")
        if "cython" in rows:
            speed = [a / b for a, b in zip(rows["numpy"], rows["cython"])]
            print(f"{n:>5} {'speedup':>8} {speed[0]:>13.1f}x {speed[1]:>16.1f}x {speed[2]:>16.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
