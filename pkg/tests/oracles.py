"""Independent reference computations used by the tests.

Nothing here calls into the package's solvers: minimizers are found on dense
grids, enclosing balls by enumerating support subsets, chains by closed forms.
"""

from itertools import combinations

import numpy as np


def grid_argmin(phi, lo, hi, step):
    xs = np.arange(lo, hi + 0.5 * step, step)
    vals = np.array([phi(x) for x in xs])
    i = int(np.argmin(vals))
    return float(xs[i]), float(vals[i])


def grid_argmin_refined(phi, lo, hi, n=2001, rounds=6):
    """Repeated grid zoom; exact to ~1e-12 for unimodal ``phi``."""
    for _ in range(rounds):
        xs = np.linspace(lo, hi, n)
        vals = np.array([phi(x) for x in xs])
        i = int(np.argmin(vals))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    return 0.5 * (lo + hi), float(phi(0.5 * (lo + hi)))


def circumcenter(P):
    """Center of the smallest sphere through ``P`` within their affine hull, or None."""
    P = np.asarray(P, dtype=float)
    if len(P) == 1:
        return P[0].copy()
    A = P[1:] - P[0]
    G = A @ A.T
    rhs = 0.5 * np.sum(A * A, axis=1)
    try:
        lam = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    if np.linalg.cond(G) > 1e12:
        return None
    return P[0] + lam @ A


def brute_force_meb(points):
    """Minimal enclosing ball by trying every support set of size <= d + 1."""
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    best = (None, np.inf)
    for k in range(1, min(n, d + 1) + 1):
        for S in combinations(range(n), k):
            c = circumcenter(P[list(S)])
            if c is None:
                continue
            r = float(np.max(np.linalg.norm(P - c, axis=1)))
            if r < best[1]:
                best = (c, r)
    return best


def scalar_chain(x0, tau, k):
    """``k`` implicit Euler steps of ``x' = -x``."""
    return x0 * (1.0 + tau) ** (-k)


def quadratic_chain(A, b, x0, tau, k):
    M = np.eye(len(x0)) + tau * np.asarray(A)
    x = np.asarray(x0, dtype=float)
    for _ in range(k):
        x = np.linalg.solve(M, x + tau * np.asarray(b))
    return x


def quadratic_exact(A, b, x0, t):
    """``exp(-A t)(x0 - x*) + x*`` via the eigendecomposition of SPD ``A``."""
    w, V = np.linalg.eigh(A)
    xs = np.linalg.solve(A, b)
    return xs + V @ (np.exp(-w * t) * (V.T @ (np.asarray(x0) - xs)))


def spider_dist(a, b):
    (la, ra), (lb, rb) = a, b
    return abs(ra - rb) if la == lb or ra == 0 or rb == 0 else ra + rb


def spider_grid_center(points, legs, R=5.0, step=1e-4):
    """Grid search of ``max_n d(x_n, c)`` over every leg of a spider."""
    best = ((0, 0.0), max(r for _, r in points))
    for leg in range(1, legs + 1):
        for r in np.arange(0.0, R, step):
            val = max(spider_dist((leg, r), p) for p in points)
            if val < best[1]:
                best = ((leg, float(r)), val)
    return best
