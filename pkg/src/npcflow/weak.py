"""Asymptotic centers, convex projections and weak-convergence diagnostics.

A conceptually infinite sequence is represented by a finite window; every
``limsup`` becomes a maximum over the tail of that window, and the centers
computed on shrinking tails are compared so that drift is visible.  In the
proper model spaces shipped here weak and strong convergence coincide, so a
center test on a trajectory tail is a strong-convergence test in disguise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import ConvexHull

from . import _kernels as K
from ._geometry import min_enclosing_ball
from .flow import mm_trajectory
from .functionals import ConvexFunctional
from .proximal import eps_prox
from .reports import CheckReport, DomainError, inequality_report
from .spaces import (HUB, Euclidean, GeodesicSpace, Hyperbolic, Product, Spider,
                     SpiderPoint)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TAIL = 0.5


@dataclass
class PointSequence:
    """A finite window of a sequence; ``tail_fraction`` sets the limsup window."""

    space: GeodesicSpace
    points: list
    tail_fraction: float = DEFAULT_TAIL

    def __post_init__(self):
        if len(self.points) == 0:
            raise DomainError("a point sequence needs at least one point")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise DomainError("tail_fraction must be in (0, 1]")
        self.points = [self.space.validate(p) for p in self.points]

    def __len__(self):
        return len(self.points)

    def tail(self, size: int | None = None) -> list:
        if size is None:
            size = max(1, int(math.ceil(self.tail_fraction * len(self.points))))
        return self.points[-max(1, min(size, len(self.points))):]


@dataclass
class AsymptoticReport:
    center: object
    radius: float
    windows: list[int]
    centers: list
    drift: list[float]
    method: str
    details: dict = field(default_factory=dict)

    def stable(self, tol: float = 1e-6) -> bool:
        """Whether the center moved by at most ``tol`` across the window doublings."""
        return all(d <= tol for d in self.drift)


def asymptotic_radius(seq: PointSequence, x, window: int | None = None) -> float:
    """Tail maximum of ``d(x_n, x)``, the finite stand-in for the limsup."""
    x = seq.space.validate(x)
    return float(np.max(seq.space.distances_to(seq.tail(window), x)))


# -- minimax centers of finite sets -----------------------------------------

def _radius(space, pts, c):
    return float(np.max(space.distances_to(pts, c)))


def _chart_maps(space):
    """``(log, exp)`` tangent charts, factorwise for products; ``None`` without charts."""
    if getattr(space, "has_charts", False):
        return space.chart_log, space.chart_exp
    if isinstance(space, Product):
        maps = [_chart_maps(f) for f in space.factors]
        if any(m is None for m in maps):
            return None
        (la, ea), (lb, eb) = maps

        def log(c, x):
            return np.concatenate([la(c[0], x[0]), lb(c[1], x[1])])

        def exp(c, v):
            n = la(c[0], c[0]).size
            return (ea(c[0], v[:n]), eb(c[1], v[n:]))
        return log, exp
    return None


def _center_chart(space, pts, start=None, max_iter=200):
    """Minimax center by repeated chart linearization.

    At the current guess the points are pulled to tangent coordinates, the
    euclidean minimum enclosing ball is solved exactly there, and the guess
    moves toward its center with step halving.
    """
    log, exp = _chart_maps(space)
    c = pts[0] if start is None else space.validate(start)
    R = _radius(space, pts, c)
    it = 0
    for it in range(1, max_iter + 1):
        V = np.array([log(c, p) for p in pts])
        w, _, _ = min_enclosing_ball(V)
        nw = float(np.linalg.norm(w))
        if nw < 1e-15:
            break
        step, moved = 1.0, False
        while step > 1e-8:
            c_new = exp(c, step * w)
            R_new = _radius(space, pts, c_new)
            if R_new < R:
                c, R, moved = c_new, R_new, True
                break
            step *= 0.5
        if not moved or nw * step < 1e-14:
            break
    return c, R, it


def _center_spider(space: Spider, pts):
    """On a metric tree the minimax center is the midpoint of a diameter."""
    D = space.pairwise_distances(pts)
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    c = space.geodesic(pts[i], pts[j], 0.5)
    return c, float(D[i, j]) / 2.0


def _line_min(phi, lo=0.0, hi=1.0, tol=1e-14):
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(d)
    return min((fc, c), (fd, d), (phi(hi), hi), (phi(lo), lo))[::-1]


def _center_descent(space: GeodesicSpace, pts, start=None, max_rounds=2000, top=4):
    """Farthest-point geodesic descent on ``c -> max_n d(x_n, c)``.

    Each round line-searches along geodesics toward the farthest points and
    toward midpoints of pairs among them, keeping the best improvement; the
    loop stops once a round gains less than ``1e-15 (1 + R)``.
    """
    c = pts[0] if start is None else space.validate(start)
    R = _radius(space, pts, c)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        d = space.distances_to(pts, c)
        order = np.argsort(-d)[:top]
        targets = [pts[i] for i in order]
        targets += [space.geodesic(pts[i], pts[j], 0.5) for i, j in combinations(order, 2)]
        best_c, best_R = c, R
        for z in targets:
            if space.distance(c, z) <= 1e-15:
                continue
            t, val = _line_min(lambda t, z=z: _radius(space, pts, space.geodesic(c, z, t)))
            if val < best_R:
                best_c, best_R = space.geodesic(c, z, t), val
        gain = R - best_R
        c, R = best_c, best_R
        if gain <= 1e-15 * (1.0 + R):
            break
    polished = _support_refine(space, pts, c, R)
    if polished is not None:
        c, R = polished
    if _chart_maps(space) is not None:
        # the hull slices searched above miss directions in products
        c2, R2, _ = _center_chart(space, pts, start=c)
        if R2 < R:
            c, R = c2, R2
    return c, R, rounds


def _hull_point(space, S, s):
    q = S[0]
    for z, t in zip(S[1:], s):
        q = space.geodesic(q, z, float(t))
    return q


def _equidistant_point(space, S):
    """Point of the iterated geodesic hull of ``S`` equidistant from all of ``S``."""
    if len(S) == 2:
        return space.geodesic(S[0], S[1], 0.5)

    def resid(s):
        d = space.distances_to(S, _hull_point(space, S, s))
        return d[1:] - d[0]

    s0 = np.array([1.0 / (k + 2) for k in range(len(S) - 1)])
    sol = least_squares(resid, s0, bounds=(0.0, 1.0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    p = _hull_point(space, S, sol.x)
    d = space.distances_to(S, p)
    if np.ptp(d) > 1e-10 * (1.0 + d[0]):
        return None
    return p


def _support_refine(space, pts, c, R, max_support=8):
    """Active-set polish of a descent result.

    Grows a support set from the near-farthest points; each round takes the
    smallest equidistant ball over subsets of the support that covers it, then
    adds the farthest uncovered point.  Returns ``None`` unless the final ball
    covers every point and is no larger than ``R``.
    """
    d = space.distances_to(pts, c)
    S = [int(i) for i in np.argsort(-d) if d[i] >= R - 1e-6 * (1.0 + R)][:max_support]
    if len(S) < 2:
        return None
    while len(S) <= max_support:
        best = None
        for m in range(2, len(S) + 1):
            for T in combinations(S, m):
                p = _equidistant_point(space, [pts[i] for i in T])
                if p is None:
                    continue
                r = float(space.distance(p, pts[T[0]]))
                if best is not None and r >= best[1]:
                    continue
                if np.max(space.distances_to([pts[i] for i in S], p)) <= r + 1e-10 * (1.0 + r):
                    best = (p, r, list(T))
        if best is None:
            return None
        p, r, S = best
        d = space.distances_to(pts, p)
        far = int(np.argmax(d))
        if d[far] <= r + 1e-10 * (1.0 + r):
            r_all = float(d[far])
            return (p, r_all) if r_all <= R * (1.0 + 1e-12) + 1e-15 else None
        S.append(far)
    return None


def minimax_center(space: GeodesicSpace, pts, method: str = "auto", start=None):
    """Center and radius of the smallest ball containing ``pts``.

    Returns ``(center, radius, method_used)``.
    """
    if len(pts) == 0:
        raise DomainError("empty point set")
    if method not in ("auto", "descent"):
        raise DomainError(f"unknown center method {method!r}")
    if method == "auto":
        if isinstance(space, Euclidean):
            c, r, _ = min_enclosing_ball(np.asarray(pts, dtype=float))
            return c, float(r), "enclosing_ball"
        if isinstance(space, Hyperbolic):
            c, r, _ = _center_chart(space, pts, start=start)
            return c, r, "chart_enclosing_ball"
        if isinstance(space, Spider):
            c, r = _center_spider(space, pts)
            return c, r, "tree_midpoint"
    c, r, _ = _center_descent(space, pts, start=start)
    return c, r, "geodesic_descent"


def asymptotic_center(seq: PointSequence, method: str = "auto", start=None,
                      doublings: int = 2) -> AsymptoticReport:
    """Center of the tail window, with drift across ``doublings`` window doublings."""
    space = seq.space
    full = len(seq.tail())
    windows = sorted({max(1, full >> k) for k in range(doublings + 1)})
    centers, radii, used = [], [], None
    for w in windows:
        c, r, used = minimax_center(space, seq.tail(w), method=method, start=start)
        centers.append(c)
        radii.append(r)
    drift = [float(space.distance(a, b)) for a, b in zip(centers, centers[1:])]
    return AsymptoticReport(center=centers[-1], radius=float(radii[-1]), windows=windows,
                            centers=centers, drift=drift, method=used,
                            details={"radii": radii,
                                     "note": "tail windows stand in for all subsequences"})


# -- convex sets --------------------------------------------------------------

CONVEX_KINDS = ("segment", "ball", "euclidean_convex_hull", "spider_subtree")


@dataclass
class ConvexSetDescriptor:
    """A closed geodesically convex set.

    ``kind`` is one of ``segment`` (``points = [x, y]``), ``ball``
    (``points = [center]``, ``radius``), ``euclidean_convex_hull`` (``points``)
    or ``spider_subtree`` (``legs`` maps leg number to maximal radius).
    """

    kind: str
    points: list = field(default_factory=list)
    radius: float | None = None
    legs: dict | None = None

    @classmethod
    def segment(cls, x, y):
        return cls("segment", [x, y])

    @classmethod
    def ball(cls, center, radius):
        return cls("ball", [center], radius=float(radius))

    @classmethod
    def hull(cls, points):
        return cls("euclidean_convex_hull", [np.asarray(p, dtype=float) for p in points])

    @classmethod
    def subtree(cls, legs: dict):
        return cls("spider_subtree", legs={int(k): float(v) for k, v in legs.items()})

    def validate(self, space: GeodesicSpace) -> "ConvexSetDescriptor":
        if self.kind not in CONVEX_KINDS:
            raise DomainError(f"unknown convex set kind {self.kind!r}; expected one of {CONVEX_KINDS}")
        if self.kind == "segment":
            if len(self.points) != 2:
                raise DomainError("a segment needs exactly two points")
        elif self.kind == "ball":
            if len(self.points) != 1 or self.radius is None or not self.radius >= 0:
                raise DomainError("a ball needs one center and a radius >= 0")
        elif self.kind == "euclidean_convex_hull":
            if not isinstance(space, Euclidean):
                raise DomainError("convex hulls are only supported on euclidean space")
            if len(self.points) == 0:
                raise DomainError("a convex hull needs at least one point")
        else:
            if not isinstance(space, Spider):
                raise DomainError("subtrees are only defined on spider spaces")
            if not self.legs:
                raise DomainError("a subtree needs at least one leg")
            for leg, R in self.legs.items():
                if not 1 <= leg <= space.legs:
                    raise DomainError(f"leg {leg} outside 1..{space.legs}")
                if not R >= 0:
                    raise DomainError(f"maximal radius on leg {leg} must be >= 0")
        pts = [space.validate(p) for p in self.points]
        return ConvexSetDescriptor(self.kind, pts, self.radius,
                                   None if self.legs is None else dict(self.legs))

    def to_dict(self, space: GeodesicSpace) -> dict:
        out = {"kind": self.kind}
        if self.kind == "spider_subtree":
            out["legs"] = [[k, v] for k, v in sorted(self.legs.items())]
        else:
            out["points"] = [space.to_coords(p) for p in self.points]
        if self.kind == "ball":
            out["radius"] = self.radius
        return out

    @classmethod
    def from_dict(cls, desc: dict, space: GeodesicSpace) -> "ConvexSetDescriptor":
        allowed = {"kind", "points", "radius", "legs"}
        extra = set(desc) - allowed
        if extra:
            raise DomainError(f"unknown convex set keys: {sorted(extra)}")
        kind = desc.get("kind")
        if kind == "spider_subtree":
            legs = desc.get("legs")
            if isinstance(legs, dict):
                legs = list(legs.items())
            return cls.subtree({int(k): float(v) for k, v in legs or []}).validate(space)
        pts = [space.from_coords(p) for p in desc.get("points", [])]
        return cls(kind, pts, desc.get("radius")).validate(space)

    def contains(self, space, x, tol: float = 1e-9) -> bool:
        return project_to_convex(space, self, x)[1] <= tol

    def random_member(self, space: GeodesicSpace, rng: np.random.Generator):
        if self.kind == "segment":
            return space.geodesic(self.points[0], self.points[1], rng.uniform())
        if self.kind == "ball":
            z = space.random_point(rng)
            return space.point_at_distance(self.points[0], z, self.radius * rng.uniform())
        if self.kind == "euclidean_convex_hull":
            w = rng.dirichlet(np.ones(len(self.points)))
            return w @ np.asarray(self.points)
        leg = int(rng.choice(sorted(self.legs)))
        return Spider.point(leg, self.legs[leg] * rng.uniform())


def convexity_membership_check(space: GeodesicSpace, C: ConvexSetDescriptor,
                               trials: int = 500, seed: int = 0) -> CheckReport:
    """Geodesic points between random members stay in the set."""
    C = C.validate(space)
    rng = np.random.default_rng(seed)
    d = []
    for _ in range(trials):
        a, b = C.random_member(space, rng), C.random_member(space, rng)
        d.append(project_to_convex(space, C, space.geodesic(a, b, rng.uniform()))[1])
    return inequality_report(f"convex_membership[{C.kind}/{space.kind}]", d,
                             np.zeros(len(d)), 1e-9)


# -- projections ----------------------------------------------------------------

def _project_segment_hyperbolic(space, a, b, x):
    L = space.distance(a, b)
    if L <= 1e-14:
        return np.array(a, dtype=float)
    a, b, x = (np.asarray(v, dtype=float) for v in (a, b, x))
    u = (b - math.cosh(L) * a) / math.sinh(L)
    mink = lambda p, q: -p[0] * q[0] + p[1:] @ q[1:]
    A, B = -mink(x, a), -mink(x, u)
    # cosh d(x, gamma(s)) = A cosh s + B sinh s, stationary where tanh s = -B/A
    s = math.atanh(max(-1.0, min(1.0, -B / A))) if abs(B) < A else (L if B < 0 else 0.0)
    s = min(max(s, 0.0), L)
    return space.geodesic(a, b, s / L)


def _spider_breakpoints(a: SpiderPoint, b: SpiderPoint, x: SpiderPoint):
    """Parameters where ``t -> d(x, gamma_ab(t))`` can change slope."""
    out = []
    if a.leg == b.leg or a.radius == 0.0 or b.radius == 0.0:
        leg = a.leg if a.radius else b.leg
        den = a.radius - b.radius
        if x.leg == leg and den != 0.0:
            out.append((a.radius - x.radius) / den)
    else:
        L = a.radius + b.radius
        out.append(a.radius / L)
        if x.leg == a.leg:
            out.append((a.radius - x.radius) / L)
        elif x.leg == b.leg:
            out.append((a.radius + x.radius) / L)
    return out


def _breakpoints(space, a, b, x):
    if isinstance(space, Spider):
        return _spider_breakpoints(a, b, x)
    if isinstance(space, Product):
        return [t for f, ai, bi, xi in zip(space.factors, a, b, x)
                for t in _breakpoints(f, ai, bi, xi)]
    return []


def _parabola_polish(phi, t, lo, hi):
    """Successive parabolic steps; exact when ``phi`` is quadratic on ``[lo, hi]``.

    Values near the minimum agree to roundoff, so a step is kept when it is
    not worse beyond that level rather than only on strict decrease.
    """
    ft = phi(t)
    h = 1e-3 * (hi - lo)
    for _ in range(8):
        l, r = max(lo, t - h), min(hi, t + h)
        if r - l <= 1e-15:
            break
        m = 0.5 * (l + r)
        fl, fm, fr = phi(l), phi(m), phi(r)
        den = fl - 2 * fm + fr
        if den <= 0:
            break
        s = min(max(m + 0.25 * (r - l) * (fl - fr) / den, lo), hi)
        fs = phi(s)
        if fs > ft + 1e-13 * abs(ft):
            break
        step = abs(s - t)
        t, ft = s, min(fs, ft)
        if step <= 1e-15:
            break
        h = max(4.0 * step, 1e-4 * (hi - lo))
    return t, ft


def _project_segment_generic(space, a, b, x):
    """Minimize ``d^2(x, gamma(t))`` piecewise between breakpoints."""
    if space.distance(a, b) <= 1e-15:
        return a
    phi = lambda t: space.distance(x, space.geodesic(a, b, t)) ** 2
    knots = sorted({0.0, 1.0, *[t for t in _breakpoints(space, a, b, x) if 0.0 < t < 1.0]})
    best = min((phi(t), t) for t in knots)[::-1]
    for lo, hi in zip(knots, knots[1:]):
        t, v = _line_min(phi, lo, hi, tol=1e-10 * (hi - lo))
        t, v = _parabola_polish(phi, t, lo, hi)
        if v < best[1]:
            best = (t, v)
    return space.geodesic(a, b, best[0])


_HULL_CACHE: dict[bytes, tuple] = {}


def _facets(Y):
    key = Y.tobytes() + bytes(str(Y.shape), "ascii")
    if key not in _HULL_CACHE:
        if len(_HULL_CACHE) > 256:
            _HULL_CACHE.clear()
        hull = ConvexHull(Y)
        eq = np.unique(np.round(hull.equations, 12), axis=0)
        A, c = eq[:, :-1], eq[:, -1]
        nrm = np.linalg.norm(A, axis=1)
        _HULL_CACHE[key] = (A / nrm[:, None], c / nrm, Y[hull.vertices])
    return _HULL_CACHE[key]


def _project_full_hull(Y, y):
    """Projection onto a full-dimensional polytope given by its vertex cloud.

    Dykstra sweeps over the facet halfspaces locate the active facets; the
    exact point is then the nearest feasible projection onto an intersection
    of at most ``dim`` active facet planes.  The result carries a vertex
    variational-inequality certificate, and full facet enumeration is the
    fallback when the certificate fails.
    """
    A, c, V = _facets(Y)
    scale = 1.0 + float(np.max(np.abs(Y))) + float(np.max(np.abs(y)))
    feas_tol = 1e-12 * scale
    if np.max(A @ y + c) <= feas_tol:
        return y.copy(), 0.0

    def certificate(z):
        return float(np.max((V - z) @ (y - z)))

    def best_of(subsets):
        best, bd = None, math.inf
        for S in subsets:
            S = list(S)
            As = A[S]
            G = As @ As.T
            if len(S) > 1 and np.linalg.cond(G) > 1e10:
                continue
            z = y - As.T @ np.linalg.solve(G, As @ y + c[S])
            if np.max(A @ z + c) <= feas_tol:
                dz = float(np.linalg.norm(z - y))
                if dz < bd:
                    best, bd = z, dz
        return best

    r = Y.shape[1]
    z, _ = K.dykstra_halfspaces(A, c, y, 100, 1e-12 * scale)
    slack = np.abs(A @ z + c)
    near = np.argsort(slack)[:max(r + 1, int(np.sum(slack <= 1e-4 * scale)))]
    cand = best_of(S for k in range(1, r + 1) for S in combinations(near, k))
    tol = 1e-10 * scale * scale
    if cand is None or certificate(cand) > tol:
        cand = best_of(S for k in range(1, r + 1) for S in combinations(range(A.shape[0]), k))
    return cand, certificate(cand)


def _project_hull(points, x):
    P = np.atleast_2d(np.asarray(points, dtype=float))
    x = np.asarray(x, dtype=float)
    base = P[0]
    D = P - base
    _, s, Vt = np.linalg.svd(D, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0]))) if s.size else 0
    if rank == 0:
        return base.copy()
    B = Vt[:rank]
    Y = D @ B.T
    y = (x - base) @ B.T
    if rank == 1:
        z = np.clip(y, Y.min(), Y.max())
    else:
        z, _ = _project_full_hull(Y, y)
    return base + z @ B


def project_to_convex(space: GeodesicSpace, C: ConvexSetDescriptor, x):
    """Nearest point of ``C`` to ``x`` and the distance to it."""
    x = space.validate(x)
    if C.kind == "segment":
        a, b = C.points
        if isinstance(space, Euclidean):
            a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
            v = b - a
            vv = float(v @ v)
            t = 0.0 if vv == 0.0 else min(max(float((x - a) @ v) / vv, 0.0), 1.0)
            p = space.geodesic(a, b, t)
        elif isinstance(space, Hyperbolic):
            p = _project_segment_hyperbolic(space, a, b, x)
        else:
            p = _project_segment_generic(space, a, b, x)
    elif C.kind == "ball":
        c = C.points[0]
        p = x if space.distance(c, x) <= C.radius else space.point_at_distance(c, x, C.radius)
    elif C.kind == "euclidean_convex_hull":
        p = _project_hull(C.points, x)
    elif C.kind == "spider_subtree":
        R = C.legs.get(x.leg)
        p = HUB if R is None else Spider.point(x.leg, min(x.radius, R))
    else:
        raise DomainError(f"unknown convex set kind {C.kind!r}")
    return p, float(space.distance(x, p))


def _sample_outside(space, C, rng, attempts=20):
    for _ in range(attempts):
        x = space.random_point(rng)
        if project_to_convex(space, C, x)[1] > 1e-9:
            return x
    return None


def projection_obtuseness_check(space: GeodesicSpace, C: ConvexSetDescriptor,
                                trials: int = 500, seed: int = 0) -> CheckReport:
    """``d^2(x, y) >= d^2(x, P x) + d^2(P x, y) - 1e-8`` for ``x`` outside and ``y`` in ``C``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    C = C.validate(space)
    rng = np.random.default_rng(seed)
    lhs, rhs, skipped = [], [], 0
    for _ in range(trials):
        x = _sample_outside(space, C, rng)
        if x is None:
            skipped += 1
            continue
        y = C.random_member(space, rng)
        p, dxp = project_to_convex(space, C, x)
        lhs.append(dxp ** 2 + space.distance(p, y) ** 2)
        rhs.append(space.distance(x, y) ** 2)
    return inequality_report(f"projection_obtuseness[{C.kind}/{space.kind}]", lhs, rhs,
                             1e-8, skipped=skipped, seed=seed)


def projection_lipschitz_check(space: GeodesicSpace, C: ConvexSetDescriptor,
                               trials: int = 500, seed: int = 0) -> CheckReport:
    """Idempotence within ``1e-10`` and ``d(P x, P y) <= d(x, y) + 1e-8``.

    Both are folded into one report as excess over their own tolerance.
    """
    C = C.validate(space)
    rng = np.random.default_rng(seed)
    idem, lip = [], []
    for _ in range(trials):
        x = space.random_point(rng)
        y = space.random_near(rng, x, 10.0 ** rng.uniform(-3, 1)) if rng.uniform() < 0.5 \
            else space.random_point(rng)
        px, _ = project_to_convex(space, C, x)
        py, _ = project_to_convex(space, C, y)
        idem.append(project_to_convex(space, C, px)[1] - 1e-10)
        lip.append(space.distance(px, py) - space.distance(x, y) - 1e-8)
    gaps = np.concatenate([idem, lip])
    report = inequality_report(f"projection_lipschitz[{C.kind}/{space.kind}]", gaps,
                               np.zeros_like(gaps), 0.0, seed=seed)
    report.details.update(idempotence_worst=float(max(idem)) + 1e-10,
                          lipschitz_worst=float(max(lip)) + 1e-8)
    return report


# -- geodesic lines through a point -------------------------------------------

def _other_leg(space: Spider, avoid):
    for leg in range(1, space.legs + 1):
        if leg != avoid:
            return leg
    return None


def _spider_ray(space: Spider, x: SpiderPoint, z: SpiderPoint, s: float, forward: bool):
    """Point at distance ``s`` from ``x`` moving toward ``z`` (or away from it).

    Past the hub the walk continues on the leg of ``z`` or, when that is not
    defined, the lowest-numbered other leg; with a single leg it stops.
    """
    if x.radius == 0.0:
        out_leg = z.leg if forward else _other_leg(space, z.leg)
        return HUB if out_leg is None else Spider.point(out_leg, s)
    outward = z.leg == x.leg and z.radius > x.radius
    if not forward:
        outward = not outward
    if outward:
        return Spider.point(x.leg, x.radius + s)
    if s <= x.radius:
        return Spider.point(x.leg, x.radius - s)
    via = z.leg if forward and z.radius > 0 and z.leg != x.leg else _other_leg(space, x.leg)
    return HUB if via is None else Spider.point(via, s - x.radius)


def _ray(space, x, z, s, forward):
    L = space.distance(x, z)
    if L <= 1e-15:
        return x
    if isinstance(space, Euclidean):
        u = (np.asarray(z) - np.asarray(x)) / L
        return np.asarray(x) + (s if forward else -s) * u
    if isinstance(space, Hyperbolic):
        u = (np.asarray(z) - math.cosh(L) * np.asarray(x)) / math.sinh(L)
        p = math.cosh(s) * np.asarray(x) + (1 if forward else -1) * math.sinh(s) * u
        return space.lift(p[1:])
    if isinstance(space, Spider):
        return _spider_ray(space, x, z, s, forward)
    if isinstance(space, Product):
        return tuple(_ray(f, xi, zi, s * f.distance(xi, zi) / L, forward)
                     for f, xi, zi in zip(space.factors, x, z))
    raise DomainError(f"no geodesic extension on {space.kind}")


def geodesic_line(space: GeodesicSpace, x, target, half_length: float) -> ConvexSetDescriptor:
    """A segment of length ``2 half_length`` with midpoint ``x`` through ``target``'s direction."""
    x, target = space.validate(x), space.validate(target)
    if space.distance(x, target) <= 1e-15:
        raise DomainError("target must differ from x to define a geodesic")
    return ConvexSetDescriptor.segment(_ray(space, x, target, half_length, False),
                                       _ray(space, x, target, half_length, True))


# -- checks -----------------------------------------------------------------------

def weak_convergence_check(seq: PointSequence, x, geodesic_targets,
                           tol: float = 1e-3) -> CheckReport:
    """Tail maximum of ``d(x, P_gamma(x_n))`` for geodesics ``gamma`` through ``x``."""
    space = seq.space
    x = space.validate(x)
    tail = seq.tail()
    R = max(1.0, 2.0 * asymptotic_radius(seq, x))
    worst_by_target, vals = [], []
    for z in geodesic_targets:
        line = geodesic_line(space, x, z, R)
        d = [space.distance(x, project_to_convex(space, line, p)[0]) for p in tail]
        worst_by_target.append(float(max(d)))
        vals.extend(d)
    report = inequality_report(f"weak_convergence[{space.kind}]", vals, np.zeros(len(vals)),
                               tol, tail_size=len(tail))
    report.details["per_geodesic_max"] = worst_by_target
    report.details["note"] = "tail windows stand in for all subsequences"
    return report


def weak_limits_in_convex_check(space: GeodesicSpace, C: ConvexSetDescriptor,
                                seq: PointSequence, tol: float = 1e-6) -> CheckReport:
    """The asymptotic center of a sequence inside ``C`` lies in ``C``."""
    C = C.validate(space)
    outside = [project_to_convex(space, C, p)[1] for p in seq.points]
    if max(outside) > 1e-9:
        raise DomainError(f"sequence leaves the convex set (distance {max(outside):.3g})")
    rep = asymptotic_center(seq)
    dist = project_to_convex(space, C, rep.center)[1]
    report = inequality_report(f"weak_limit_in_convex[{C.kind}/{space.kind}]", [dist], [0.0],
                               tol, center_drift=rep.drift)
    report.details["center"] = space.to_coords(rep.center)
    return report


def weak_lsc_check(f: ConvexFunctional, space: GeodesicSpace, seq: PointSequence,
                   center=None, tol: float = 1e-6) -> CheckReport:
    """``f(center) <= min of f over the tail + tol``."""
    f.check_space(space)
    if center is None:
        center = asymptotic_center(seq).center
    fc = f.value(space, center)
    tail_min = min(f.value(space, p) for p in seq.tail())
    report = inequality_report(f"weak_lsc[{f.kind}/{space.kind}]", [fc], [tail_min], tol)
    report.details.update(center_value=fc, tail_min=tail_min)
    return report


def bacak_convergence_harness(f: ConvexFunctional, space: GeodesicSpace, x0,
                              T_max: float = 50.0, sample_times=None,
                              n_per_unit: int = 64, minimizers=None,
                              value_tol: float = 1e-6, center_tol: float = 1e-3) -> CheckReport:
    """The trajectory's asymptotic center minimizes ``f``.

    Asserts ``f(center) - inf f <= value_tol``, ``d(center, minimizer) <=
    center_tol`` when the minimizer is unique, and that ``d(x_t, y)`` is
    nonincreasing for every supplied minimizer ``y`` (slack ``4 eps_prox``
    per chain step).
    """
    f.check_space(space)
    x0 = space.validate(x0)
    inf = f.infimum(space)
    if inf is None or not math.isfinite(inf) or f.minimizer(space) is None:
        raise DomainError(f"{f.kind} has no known minimizer on this space")
    if minimizers is None:
        minimizers = [f.minimizer(space)]
    minimizers = [space.validate(y) for y in minimizers]
    if T_max == 0:
        times, pts, tau = np.zeros(1), [x0], None
    else:
        traj = mm_trajectory(f, space, x0, T_max, samples=None, n_per_unit=n_per_unit,
                             with_slopes=False)
        if sample_times is None:
            sample_times = np.linspace(0.0, T_max, 201)
        idx = sorted({traj.index_of(t, atol=0.5 / n_per_unit) for t in sample_times})
        times, pts, tau = traj.times[idx], [traj.points[i] for i in idx], traj.tau
    rep = asymptotic_center(PointSequence(space, pts))
    gap = f.value(space, rep.center) - inf
    lhs, rhs = [gap], [value_tol]
    dist = None
    if f.minimizer_is_unique(space):
        dist = space.distance(rep.center, f.minimizer(space))
        lhs.append(dist)
        rhs.append(center_tol)
    for y in minimizers:
        d = space.distances_to(pts, y)
        if tau is not None and len(d) > 1:
            steps = np.round(np.diff(times) / tau)
            lhs.extend(d[1:])
            rhs.extend(d[:-1] + 4.0 * eps_prox(tau) * steps)
    report = inequality_report(f"bacak_convergence[{f.kind}/{space.kind}]", lhs, rhs, 0.0,
                               T_max=T_max, n_per_unit=n_per_unit)
    report.details.update(value_gap=gap, center_distance=dist, center_drift=rep.drift,
                          center=space.to_coords(rep.center),
                          note="weak and strong convergence coincide in proper spaces")
    return report
