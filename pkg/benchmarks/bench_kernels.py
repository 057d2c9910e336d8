"""Time the compiled kernels against the pure-NumPy fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Every case is
first checked for agreement between the two backends, then timed with
:mod:`timeit`; the table reports the best of ``repeat`` runs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from npcflow._kernels import backend_module


def _lift(rng, n, d):
    S = rng.standard_normal((n, d))
    return np.column_stack([np.sqrt(1.0 + np.sum(S * S, axis=1)), S])


def cases(rng):
    X3, Y3, Z3 = (rng.standard_normal((2000, 3)) for _ in range(3))
    H = [_lift(rng, 2000, 2) for _ in range(3)]
    t = rng.uniform(0, 1, 2000)
    P = np.eye(5) * 0.99
    q = rng.standard_normal(5) * 0.01
    A = rng.standard_normal((12, 3))
    A /= np.linalg.norm(A, axis=1)[:, None]
    c = -np.abs(rng.standard_normal(12))
    x0, anchor = H[0][0], H[1][0]
    ideal = np.array([1.0, 1.0, 0.0])
    y = 5.0 * rng.standard_normal(3)
    return {
        "affine_chain n=4096": lambda K: K.affine_chain(P, q, np.ones(5), 4096, 1),
        "hyperbolic_anchor_chain n=4096": lambda K: K.hyperbolic_anchor_chain(x0, anchor, 0.01, 4096, 1),
        "hyperbolic_busemann_chain n=4096": lambda K: K.hyperbolic_busemann_chain(x0, ideal, 1 / 256, 4096, 1),
        "npc_gaps_euclidean 2000": lambda K: K.npc_gaps_euclidean(X3, Y3, Z3, t),
        "npc_gaps_hyperbolic 2000": lambda K: K.npc_gaps_hyperbolic(*H, t),
        "pairwise_hyperbolic 300": lambda K: K.pairwise_hyperbolic(H[0][:300]),
        "dykstra_halfspaces m=12": lambda K: K.dykstra_halfspaces(A, c, y, 100, 1e-12),
    }


def _result(v):
    return v[0] if isinstance(v, tuple) else v


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py = backend_module("python")
    try:
        cy = backend_module("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(rng).items():
        diff = float(np.max(np.abs(_result(fn(py)) - _result(fn(cy)))))
        times = {}
        for label, K in (("python", py), ("cython", cy)):
            number = 3
            times[label] = min(timeit.repeat(lambda: fn(K), number=number, repeat=args.repeat)) / number
        print(f"{name:36s} {1e3 * times['python']:12.3f} {1e3 * times['cython']:12.3f} "
              f"{times['python'] / times['cython']:8.1f} {diff:11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
