"""Small exact solvers used by several modules.

Both problems are tiny in practice (a handful of active pieces or support
points), so they are solved by enumerating candidate supports and checking
the KKT conditions exactly rather than by iterative methods.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .reports import DomainError

MAX_SIMPLEX_QP = 12


def simplex_qp(Q, a, tol=1e-12):
    """Minimize ``0.5 l^T Q l - a^T l`` over the probability simplex.

    ``Q`` must be positive semidefinite.  Returns ``(lam, value)``.
    """
    Q = np.asarray(Q, dtype=float)
    a = np.asarray(a, dtype=float)
    n = a.size
    if n > MAX_SIMPLEX_QP:
        raise DomainError(f"simplex_qp supports at most {MAX_SIMPLEX_QP} pieces, got {n}")
    scale = 1.0 + np.max(np.abs(Q)) + np.max(np.abs(a))
    best = None
    for k in range(1, n + 1):
        for S in combinations(range(n), k):
            S = list(S)
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = Q[np.ix_(S, S)]
            M[:k, k] = 1.0
            M[k, :k] = 1.0
            rhs = np.concatenate([a[S], [1.0]])
            sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            if np.linalg.norm(M @ sol - rhs) > 1e-9 * scale:
                continue
            lam_S = sol[:k]
            if np.any(lam_S < -tol):
                continue
            lam = np.zeros(n)
            lam[S] = np.maximum(lam_S, 0.0)
            lam /= lam.sum()
            grad = Q @ lam - a
            # KKT: all gradient entries >= the multiplier on the support
            nu = np.min(grad[S]) if k else 0.0
            if np.all(grad >= nu - 1e-9 * scale):
                val = 0.5 * lam @ Q @ lam - a @ lam
                if best is None or val < best[1] - 1e-15 * scale:
                    best = (lam, val)
        if best is not None:
            return best
    raise RuntimeError("simplex_qp found no KKT point")


def min_norm_in_hull(vectors):
    """Minimum-norm point of the convex hull of the rows of ``vectors``."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    lam, _ = simplex_qp(V @ V.T, np.zeros(V.shape[0]))
    return lam @ V


def circumball(points):
    """Center and radius of the smallest ball with all ``points`` on its boundary
    inside their affine hull.  Returns ``None`` for affinely dependent sets."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    p0 = P[0]
    if P.shape[0] == 1:
        return p0.copy(), 0.0
    D = P[1:] - p0
    G = 2.0 * D @ D.T
    rhs = np.sum(D * D, axis=1)
    gmax = float(np.max(np.abs(G)))
    if gmax == 0.0 or np.linalg.matrix_rank(G, tol=1e-12 * gmax) < G.shape[0]:
        return None
    alpha = np.linalg.solve(G, rhs)
    c = p0 + alpha @ D
    return c, float(np.max(np.linalg.norm(P - c, axis=1)))


def _ball_of_support(S):
    """Smallest enclosing ball of a small set by enumerating sub-supports."""
    best = None
    n = S.shape[0]
    spread = 1.0 + float(np.max(np.abs(S)))
    for k in range(1, n + 1):
        for idx in combinations(range(n), k):
            cb = circumball(S[list(idx)])
            if cb is None:
                continue
            c, r = cb
            if np.all(np.linalg.norm(S - c, axis=1) <= r * (1 + 1e-12) + 1e-15 * spread):
                if best is None or r < best[1]:
                    best = (c, r, [int(i) for i in idx])
    return best


def min_enclosing_ball(points, max_iter=10_000):
    """Exact Euclidean minimum enclosing ball by support-set pivoting.

    Starting from the support ``{p0, farthest}``, the farthest outside point
    is added and the support is reduced to that of the smallest ball of the
    enlarged set.  The radius increases strictly, so the loop terminates.
    Returns ``(center, radius, support_indices)``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m = P.shape[0]
    if m == 1:
        return P[0].copy(), 0.0, [0]
    spread = 1.0 + float(np.max(np.abs(P)))
    far = int(np.argmax(np.linalg.norm(P - P[0], axis=1)))
    support = [0, far] if far != 0 else [0]
    for _ in range(max_iter):
        c, r, idx = _ball_of_support(P[support])
        support = [support[i] for i in idx]
        dist = np.linalg.norm(P - c, axis=1)
        j = int(np.argmax(dist))
        if dist[j] <= r * (1 + 1e-12) + 1e-15 * spread:
            return c, r, support
        support = support + [j]
    raise RuntimeError("min_enclosing_ball did not converge")
