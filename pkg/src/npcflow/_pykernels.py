"""Pure NumPy implementations of the numerical kernels.

These mirror ``_ckernels.pyx`` function for function and are used whenever
the compiled extension is unavailable (or ``NPCFLOW_PURE_PYTHON=1``).
"""

import numpy as np


def minkowski_dot(x, y):
    return float(-x[0] * y[0] + np.dot(x[1:], y[1:]))


def hyperbolic_distance(x, y):
    # chord form avoids the sqrt(eps) loss of arccosh near the diagonal
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    chord2 = -dx[0] * dx[0] + float(np.dot(dx[1:], dx[1:]))
    if chord2 <= 0.0:
        return 0.0
    return float(2.0 * np.arcsinh(0.5 * np.sqrt(chord2)))


def hyperbolic_lift(spatial):
    spatial = np.asarray(spatial, dtype=float)
    return np.concatenate(([np.sqrt(1.0 + np.dot(spatial, spatial))], spatial))


def hyperbolic_geodesic(x, y, t, length):
    if length < 1e-14:
        return np.array(x, dtype=float)
    s = np.sinh(length)
    z = (np.sinh((1.0 - t) * length) / s) * np.asarray(x) + (np.sinh(t * length) / s) * np.asarray(y)
    return hyperbolic_lift(z[1:])


def hyperbolic_distances(X, Y):
    D = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
    chord2 = -D[:, 0] ** 2 + np.sum(D[:, 1:] ** 2, axis=1)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(chord2, 0.0)))


def euclidean_distances(X, Y):
    return np.linalg.norm(np.asarray(X, dtype=float) - np.asarray(Y, dtype=float), axis=1)


def pairwise_euclidean(X):
    X = np.asarray(X, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def pairwise_hyperbolic(X):
    X = np.asarray(X, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    chord2 = -diff[..., 0] ** 2 + np.sum(diff[..., 1:] ** 2, axis=-1)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(chord2, 0.0)))


def affine_chain(P, q, y0, n, stride):
    """Iterate ``y <- P y + q`` ``n`` times, recording every ``stride``-th state."""
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((n // stride + 1, y.size))
    out[0] = y
    j = 1
    for k in range(1, n + 1):
        y = P @ y + q
        if k % stride == 0:
            out[j] = y
            j += 1
    return out


def hyperbolic_anchor_chain(x0, anchor, frac, n, stride):
    """Iterate ``x <- geodesic(x, anchor, frac)`` on the hyperboloid."""
    x = np.array(x0, dtype=float)
    a = np.asarray(anchor, dtype=float)
    out = np.empty((n // stride + 1, x.size))
    out[0] = x
    j = 1
    for k in range(1, n + 1):
        x = hyperbolic_geodesic(x, a, frac, hyperbolic_distance(x, a))
        if k % stride == 0:
            out[j] = x
            j += 1
    return out


def busemann_gap(x, p):
    """``-<x, p>_M`` for light-like ``p`` with ``p0 = 1``, without cancellation far out."""
    xs = np.asarray(x[1:], dtype=float)
    ps = np.asarray(p[1:], dtype=float)
    s = float(np.dot(xs, ps))
    x0 = float(np.sqrt(1.0 + np.dot(xs, xs)))
    if s <= 0.0:
        return x0 - s
    w = xs - s * ps
    return (1.0 + float(np.dot(w, w))) / (x0 + s)


def busemann_step(x, p, tau):
    m = busemann_gap(x, p)
    # cosh(tau) x + sinh(tau) (p - m x) / m, regrouped so nothing cancels
    z = np.exp(-tau) * np.asarray(x, dtype=float) + (np.sinh(tau) / m) * np.asarray(p, dtype=float)
    return hyperbolic_lift(z[1:])


def hyperbolic_busemann_chain(x0, ideal, tau, n, stride):
    """Iterate the Busemann resolvent: unit-speed motion toward ``ideal``."""
    x = np.array(x0, dtype=float)
    out = np.empty((n // stride + 1, x.size))
    out[0] = x
    j = 1
    for k in range(1, n + 1):
        x = busemann_step(x, ideal, tau)
        if k % stride == 0:
            out[j] = x
            j += 1
    return out


def npc_gaps_euclidean(X, Y, Z, t):
    """``d^2(z, g(t)) - [(1-t) d^2(z,x) + t d^2(z,y) - t(1-t) d^2(x,y)]`` per row."""
    X, Y, Z = (np.asarray(a, dtype=float) for a in (X, Y, Z))
    t = np.asarray(t, dtype=float)
    G = (1.0 - t)[:, None] * X + t[:, None] * Y
    sq = lambda A, B: np.sum((A - B) ** 2, axis=1)
    return sq(Z, G) - ((1.0 - t) * sq(Z, X) + t * sq(Z, Y) - t * (1.0 - t) * sq(X, Y))


def npc_gaps_hyperbolic(X, Y, Z, t):
    X, Y, Z = (np.asarray(a, dtype=float) for a in (X, Y, Z))
    t = np.asarray(t, dtype=float)
    L = hyperbolic_distances(X, Y)
    G = np.empty_like(X)
    for i in range(X.shape[0]):
        G[i] = hyperbolic_geodesic(X[i], Y[i], t[i], L[i])
    dzg = hyperbolic_distances(Z, G) ** 2
    dzx = hyperbolic_distances(Z, X) ** 2
    dzy = hyperbolic_distances(Z, Y) ** 2
    return dzg - ((1.0 - t) * dzx + t * dzy - t * (1.0 - t) * L ** 2)


def dykstra_halfspaces(A, c, y, sweeps, tol):
    """Dykstra's alternating projections onto ``{z : A z + c <= 0}``.

    ``A`` has unit rows.  Returns ``(z, sweeps_used)``.
    """
    A = np.ascontiguousarray(A, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    z = np.array(y, dtype=float)
    incr = np.zeros_like(A)
    used = 0
    for used in range(1, sweeps + 1):
        prev = z.copy()
        for j in range(A.shape[0]):
            w = z + incr[j]
            viol = A[j] @ w + c[j]
            z = w - viol * A[j] if viol > 0 else w
            incr[j] = w - z
        if np.linalg.norm(z - prev) <= tol:
            break
    return z, used
