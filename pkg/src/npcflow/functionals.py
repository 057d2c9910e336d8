"""Geodesically convex functionals, lower slopes and their certification.

Every functional exposes its value, and where known its exact lower slope,
a closed-form resolvent, a Euclidean gradient, minimizers and infimum.  The
``hints`` method returns points worth searching toward (anchors, minimizers,
descent rays) for the generic solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _kernels as K
from ._geometry import MAX_SIMPLEX_QP, min_norm_in_hull, simplex_qp
from .reports import CheckReport, DomainError, inequality_report
from .spaces import Euclidean, GeodesicSpace

CONVEXITY_TOLERANCE = 1e-9
DEFAULT_RADII = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_DIRECTIONS = 64


class ConvexFunctional:
    kind = "abstract"
    space_kinds: tuple[str, ...] = ()
    has_exact_slope = False
    has_closed_form_prox = False
    has_smooth_gradient = False

    def check_space(self, space: GeodesicSpace):
        if space.kind not in self.space_kinds:
            raise DomainError(f"{self.kind} is not defined on {space.kind} spaces")

    def value(self, space, x) -> float:
        raise NotImplementedError

    def slope(self, space, x) -> float:
        raise NotImplementedError(f"{self.kind} has no exact slope")

    def gradient(self, space, x):
        raise DomainError(f"{self.kind} exposes no smooth gradient")

    def prox(self, space, x, tau):
        raise NotImplementedError(f"{self.kind} has no closed-form resolvent")

    def minimizer(self, space):
        """A minimizer if one exists and is known, else ``None``."""
        return None

    def infimum(self, space):
        """The infimum if known (``-inf`` when unbounded below), else ``None``."""
        return None

    def is_bounded_below(self, space) -> bool:
        inf = self.infimum(space)
        return inf is not None and math.isfinite(inf)

    def hints(self, space, x) -> list:
        return []

    def slope_infimum(self, space):
        """``inf`` of the lower slope over the space, when known."""
        return 0.0 if self.minimizer(space) is not None else None

    def minimizer_is_unique(self, space) -> bool:
        return False

    def lipschitz(self, space) -> float | None:
        return None

    def descriptor(self, space) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class HalfSquaredDistance(ConvexFunctional):
    """``x -> d(x, anchor)^2 / 2``."""

    kind = "half_squared_distance"
    space_kinds = ("euclidean", "hyperbolic", "spider", "product")
    has_exact_slope = True
    has_closed_form_prox = True
    has_smooth_gradient = True

    def __init__(self, anchor):
        self.anchor = anchor

    def check_space(self, space):
        super().check_space(space)
        self.anchor = space.validate(self.anchor)

    def value(self, space, x):
        return 0.5 * space.distance(x, self.anchor) ** 2

    def slope(self, space, x):
        return space.distance(x, self.anchor)

    def gradient(self, space, x):
        if not isinstance(space, Euclidean):
            raise DomainError("gradient is only exposed on euclidean space")
        return np.asarray(x, dtype=float) - self.anchor

    def prox(self, space, x, tau):
        return space.geodesic(x, self.anchor, tau / (1.0 + tau))

    def minimizer(self, space):
        return self.anchor

    def minimizer_is_unique(self, space):
        return True

    def infimum(self, space):
        return 0.0

    def hints(self, space, x):
        return [self.anchor]

    def descriptor(self, space):
        return {"kind": self.kind, "anchor": space.to_coords(self.anchor)}

    def __repr__(self):
        return f"HalfSquaredDistance(anchor={self.anchor!r})"


class ScaledDistance(ConvexFunctional):
    """``x -> c * d(x, anchor)`` with ``c > 0``."""

    kind = "scaled_distance"
    space_kinds = ("euclidean", "hyperbolic", "spider", "product")
    has_exact_slope = True
    has_closed_form_prox = True

    def __init__(self, c, anchor):
        if not c > 0:
            raise DomainError(f"scaled distance needs c > 0, got {c}")
        self.c = float(c)
        self.anchor = anchor

    def check_space(self, space):
        super().check_space(space)
        self.anchor = space.validate(self.anchor)

    def value(self, space, x):
        return self.c * space.distance(x, self.anchor)

    def slope(self, space, x):
        return self.c if space.distance(x, self.anchor) > 0 else 0.0

    def prox(self, space, x, tau):
        L = space.distance(x, self.anchor)
        if L <= self.c * tau:
            return self.anchor
        return space.geodesic(x, self.anchor, self.c * tau / L)

    def minimizer(self, space):
        return self.anchor

    def minimizer_is_unique(self, space):
        return True

    def infimum(self, space):
        return 0.0

    def hints(self, space, x):
        return [self.anchor]

    def lipschitz(self, space):
        return self.c

    def descriptor(self, space):
        return {"kind": self.kind, "c": self.c, "anchor": space.to_coords(self.anchor)}

    def __repr__(self):
        return f"ScaledDistance(c={self.c}, anchor={self.anchor!r})"


class QuadraticForm(ConvexFunctional):
    """``x -> x^T A x / 2 - b^T x`` on euclidean space, ``A`` symmetric PSD."""

    kind = "quadratic"
    space_kinds = ("euclidean",)
    has_exact_slope = True
    has_closed_form_prox = True
    has_smooth_gradient = True

    def __init__(self, A, b=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError(f"A must be square, got shape {A.shape}")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
            raise DomainError("A must be symmetric")
        A = 0.5 * (A + A.T)
        evals, evecs = np.linalg.eigh(A)
        if evals[0] < -1e-10:
            raise DomainError(f"A must be positive semidefinite (smallest eigenvalue {evals[0]:.3g})")
        self.A = A
        self.b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if self.b.shape != (A.shape[0],):
            raise DomainError("b must match the dimension of A")
        self.eigenvalues = np.maximum(evals, 0.0)
        self.eigenvectors = evecs
        self._chain_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def dim(self):
        return self.A.shape[0]

    def check_space(self, space):
        super().check_space(space)
        if space.dim != self.dim:
            raise DomainError(f"quadratic of dimension {self.dim} on euclidean space of dimension {space.dim}")

    def value(self, space, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.A @ x - self.b @ x)

    def gradient(self, space, x):
        return self.A @ np.asarray(x, dtype=float) - self.b

    def slope(self, space, x):
        return float(np.linalg.norm(self.gradient(space, x)))

    def resolvent_map(self, tau):
        """``(P, q)`` with ``W_tau(x) = P x + q``."""
        key = float(tau)
        if key not in self._chain_cache:
            M = np.eye(self.dim) + tau * self.A
            P = np.linalg.solve(M, np.eye(self.dim))
            q = np.linalg.solve(M, tau * self.b)
            self._chain_cache[key] = (P, q)
        return self._chain_cache[key]

    def prox(self, space, x, tau):
        M = np.eye(self.dim) + tau * self.A
        return np.linalg.solve(M, np.asarray(x, dtype=float) + tau * self.b)

    def _range_part(self):
        lam, V = self.eigenvalues, self.eigenvectors
        coef = V.T @ self.b
        tol = 1e-10 * max(1.0, lam[-1])
        null = lam <= tol
        return lam, V, coef, null, tol

    def minimizer(self, space=None):
        lam, V, coef, null, _ = self._range_part()
        if np.any(np.abs(coef[null]) > 1e-12 * max(1.0, np.linalg.norm(self.b))):
            return None
        inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, lam))
        return V @ (inv * coef)

    def minimizer_is_unique(self, space=None):
        lam, _, _, null, _ = self._range_part()
        return not np.any(null)

    def infimum(self, space=None):
        xstar = self.minimizer(space)
        if xstar is None:
            return -math.inf
        return self.value(space, xstar)

    def hints(self, space, x):
        xstar = self.minimizer(space)
        return [] if xstar is None else [xstar]

    def exact_flow(self, x0, t):
        """Closed-form solution of ``x' = -(A x - b)`` at time ``t``."""
        lam, V, coef, null, _ = self._range_part()
        y0 = V.T @ np.asarray(x0, dtype=float)
        y = np.empty_like(y0)
        for i, li in enumerate(lam):
            if null[i]:
                y[i] = y0[i] + coef[i] * t
            else:
                ys = coef[i] / li
                y[i] = ys + math.exp(-li * t) * (y0[i] - ys)
        return V @ y

    def descriptor(self, space=None):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}

    def __repr__(self):
        return f"QuadraticForm(A={self.A.tolist()}, b={self.b.tolist()})"


class Busemann(ConvexFunctional):
    """``x -> log(-<x, p>_M)`` for a future light-like ``p`` (unit slope, no minimizer)."""

    kind = "busemann"
    space_kinds = ("hyperbolic",)
    has_exact_slope = True
    has_closed_form_prox = True
    has_smooth_gradient = True

    def __init__(self, ideal):
        p = np.asarray(ideal, dtype=float).reshape(-1)
        if p.size < 2 or not p[0] > 0:
            raise DomainError("ideal point must have p0 > 0")
        p = p / p[0]
        q = K.minkowski_dot(p, p)
        if abs(q) > 1e-12:
            raise DomainError(f"ideal point must be light-like, <p,p>_M = {q!r}")
        self.ideal = p

    def check_space(self, space):
        super().check_space(space)
        if space.dim + 1 != self.ideal.size:
            raise DomainError("ideal point dimension does not match the space")

    def value(self, space, x):
        return math.log(K.busemann_gap(x, self.ideal))

    def slope(self, space, x):
        return 1.0

    def prox(self, space, x, tau):
        return K.busemann_step(x, self.ideal, tau)

    def ray_point(self, x, s):
        """Point at distance ``s`` from ``x`` along the ray toward the ideal point."""
        return K.busemann_step(x, self.ideal, s)

    def infimum(self, space):
        return -math.inf

    def slope_infimum(self, space):
        return 1.0

    def hints(self, space, x):
        return [self.ray_point(x, 1.0)]

    def lipschitz(self, space):
        return 1.0

    def descriptor(self, space=None):
        return {"kind": self.kind, "ideal": self.ideal.tolist()}

    def __repr__(self):
        return f"Busemann(ideal={self.ideal.tolist()})"


class MaxAffine(ConvexFunctional):
    """``x -> max_i (g_i . x + c_i)`` on euclidean space."""

    kind = "max_affine"
    space_kinds = ("euclidean",)
    has_exact_slope = True
    has_closed_form_prox = True

    def __init__(self, pieces):
        pieces = list(pieces)
        if not pieces:
            raise DomainError("max_affine needs at least one piece")
        if len(pieces) > MAX_SIMPLEX_QP:
            raise DomainError(f"max_affine supports at most {MAX_SIMPLEX_QP} pieces")
        self.G = np.array([np.atleast_1d(np.asarray(g, dtype=float)) for g, _ in pieces])
        self.c = np.array([float(c) for _, c in pieces])
        self._lp = None

    @property
    def dim(self):
        return self.G.shape[1]

    def check_space(self, space):
        super().check_space(space)
        if space.dim != self.dim:
            raise DomainError("max_affine dimension does not match the space")

    def value(self, space, x):
        return float(np.max(self.G @ np.asarray(x, dtype=float) + self.c))

    def active(self, x, rtol=1e-12):
        vals = self.G @ np.asarray(x, dtype=float) + self.c
        top = np.max(vals)
        return np.flatnonzero(vals >= top - rtol * (1.0 + abs(top)))

    def slope(self, space, x):
        # distance from 0 to the subdifferential conv{g_i : i active}
        return float(np.linalg.norm(min_norm_in_hull(self.G[self.active(x)])))

    def prox(self, space, x, tau):
        # dual: y = x - tau G^T lam with lam maximizing lam.a - tau/2 |G^T lam|^2
        x = np.asarray(x, dtype=float)
        a = self.G @ x + self.c
        lam, _ = simplex_qp(tau * self.G @ self.G.T, a)
        return x - tau * self.G.T @ lam

    def _solve_lp(self):
        if self._lp is None:
            n = self.dim
            cost = np.zeros(n + 1)
            cost[-1] = 1.0
            A_ub = np.hstack([self.G, -np.ones((len(self.c), 1))])
            res = linprog(cost, A_ub=A_ub, b_ub=-self.c, bounds=[(None, None)] * (n + 1),
                          method="highs")
            self._lp = res
        return self._lp

    def minimizer(self, space=None):
        res = self._solve_lp()
        return res.x[:-1] if res.status == 0 else None

    def infimum(self, space=None):
        res = self._solve_lp()
        if res.status == 3:
            return -math.inf
        return float(res.fun) if res.status == 0 else None

    def hints(self, space, x):
        xstar = self.minimizer(space)
        return [] if xstar is None else [xstar]

    def lipschitz(self, space):
        return float(np.max(np.linalg.norm(self.G, axis=1)))

    def descriptor(self, space=None):
        return {"kind": self.kind,
                "pieces": [[g.tolist(), float(c)] for g, c in zip(self.G, self.c)]}

    def __repr__(self):
        return f"MaxAffine(pieces={len(self.c)})"


FUNCTIONAL_KINDS = ("half_squared_distance", "scaled_distance", "quadratic", "busemann", "max_affine")


def functional_from_descriptor(desc: dict, space: GeodesicSpace) -> ConvexFunctional:
    """Build and bind a functional from its config descriptor."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise DomainError(f"functional descriptor must be a mapping with 'kind': {desc!r}")
    kind = desc["kind"]
    allowed = {
        "half_squared_distance": {"kind", "anchor"},
        "scaled_distance": {"kind", "c", "anchor"},
        "quadratic": {"kind", "A", "b"},
        "busemann": {"kind", "ideal"},
        "max_affine": {"kind", "pieces"},
    }
    if kind not in allowed:
        raise DomainError(f"unknown functional kind {kind!r}; expected one of {FUNCTIONAL_KINDS}")
    extra = set(desc) - allowed[kind]
    if extra:
        raise DomainError(f"unknown keys for {kind} functional: {sorted(extra)}")
    try:
        if kind == "half_squared_distance":
            f = HalfSquaredDistance(space.from_coords(desc["anchor"]))
        elif kind == "scaled_distance":
            f = ScaledDistance(desc["c"], space.from_coords(desc["anchor"]))
        elif kind == "quadratic":
            f = QuadraticForm(desc["A"], desc.get("b"))
        elif kind == "busemann":
            f = Busemann(desc["ideal"])
        else:
            f = MaxAffine([(g, c) for g, c in desc["pieces"]])
    except KeyError as exc:
        raise DomainError(f"{kind} descriptor missing {exc.args[0]!r}") from None
    f.check_space(space)
    return f


def value(f: ConvexFunctional, space: GeodesicSpace, x) -> float:
    """Validated functional value."""
    f.check_space(space)
    return f.value(space, space.validate(x))


# -- lower slope -------------------------------------------------------------

@dataclass
class SlopeEstimate:
    value: float
    radii: list[float]
    quotients: list[float]
    converged: bool
    error_bound: float
    details: dict = field(default_factory=dict)


def _best_quotient(f, space, x, fx, r, targets, rng, refine_rounds, refine_width):
    best_q, best_t = -math.inf, None
    for z in targets:
        y = space.point_at_distance(x, z, r)
        dy = space.distance(x, y)
        if dy < 0.5 * r:
            continue
        q = (fx - f.value(space, y)) / dy
        if q > best_q:
            best_q, best_t = q, z
    if best_t is None:
        return best_q, None
    # hill-climb the direction by perturbing the best target
    width = refine_width
    for _ in range(refine_rounds):
        improved = False
        for _ in range(6):
            z = space.random_near(rng, best_t, width)
            y = space.point_at_distance(x, z, r)
            dy = space.distance(x, y)
            if dy < 0.5 * r:
                continue
            q = (fx - f.value(space, y)) / dy
            if q > best_q:
                best_q, best_t, improved = q, z, True
        if not improved:
            width *= 0.5
    return best_q, best_t


def lower_slope_estimate(f: ConvexFunctional, space: GeodesicSpace, x,
                         directions: int = DEFAULT_DIRECTIONS,
                         radii=DEFAULT_RADII, seed: int = 0,
                         refine_rounds: int = 40) -> SlopeEstimate:
    """Estimate the lower slope ``max(limsup (f(x) - f(y)) / d(x, y), 0)``.

    For each radius the difference quotient is maximized over points at that
    distance along geodesics toward random targets and toward the
    functional's hints, followed by a local hill-climb over the direction.
    The smallest radius gives the estimate; the last two radii must agree
    within 1% for the estimate to count as converged.
    """
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise DomainError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly decreasing")
    if directions < 1:
        raise DomainError("directions must be >= 1")
    f.check_space(space)
    x = space.validate(x)
    rng = np.random.default_rng(seed)
    fx = f.value(space, x)
    reach = max(1.0, 10.0 * radii[0])
    hints = [h for h in f.hints(space, x) if space.distance(x, h) > 0]
    randoms = [space.random_near(rng, x, reach) for _ in range(directions)]
    quotients = []
    best_target = None
    for r in radii:
        targets = hints + randoms + ([best_target] if best_target is not None else [])
        q, t = _best_quotient(f, space, x, fx, r, targets, rng, refine_rounds, 0.5 * reach)
        if t is not None:
            best_target = t
        quotients.append(q)
    clipped = [max(q, 0.0) for q in quotients]
    value_ = clipped[-1]
    err = abs(clipped[-1] - clipped[-2]) if len(clipped) > 1 else math.inf
    converged = bool(err <= 0.01 * max(value_, 1e-12)) or value_ == 0.0 == clipped[-2]
    return SlopeEstimate(value=value_, radii=radii, quotients=quotients,
                         converged=converged, error_bound=err)


def slope(f: ConvexFunctional, space: GeodesicSpace, x, seed: int = 0):
    """Exact slope when available, else ``(estimate, error_bound)`` from the estimator.

    Returns ``(value, error_bound, ok)``.
    """
    if f.has_exact_slope:
        return f.slope(space, x), 0.0, True
    est = lower_slope_estimate(f, space, x, seed=seed)
    return est.value, est.error_bound, est.converged


# -- certification --------------------------------------------------------------

def _sample_points(f, space, rng, n):
    return [space.random_point(rng) for _ in range(n)]


def convexity_certify(f: ConvexFunctional, space: GeodesicSpace, trials: int = 1000,
                      seed: int = 0) -> CheckReport:
    """Check ``f(g(t)) <= (1-t) f(x) + t f(y)`` on random geodesics."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    f.check_space(space)
    rng = np.random.default_rng(seed)
    lhs, rhs = [], []
    for _ in range(trials):
        x, y = space.random_point(rng), space.random_point(rng)
        t = float(rng.uniform())
        lhs.append(f.value(space, space.geodesic(x, y, t)))
        rhs.append((1 - t) * f.value(space, x) + t * f.value(space, y))
    return inequality_report(f"convexity[{f.kind}/{space.kind}]", lhs, rhs,
                             CONVEXITY_TOLERANCE, seed=seed)


def chen_inequality_check(f: ConvexFunctional, space: GeodesicSpace, trials: int = 500,
                          seed: int = 0, pairs=None) -> CheckReport:
    """Check ``f(y) >= f(x) - slope(x) d(x, y)`` on random pairs.

    Pairs with a non-convergent slope estimate are skipped and counted.
    """
    f.check_space(space)
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = [(space.random_point(rng), space.random_point(rng)) for _ in range(trials)]
    lhs, rhs = [], []
    skipped = 0
    for i, (x, y) in enumerate(pairs):
        s, err, ok = slope(f, space, x, seed=seed + i)
        if not ok:
            skipped += 1
            continue
        d = space.distance(x, y)
        tol = 1e-8 + 2.0 * err * d
        lhs.append(f.value(space, x) - s * d - tol)
        rhs.append(f.value(space, y))
    report = inequality_report(f"chen[{f.kind}/{space.kind}]", lhs, rhs, 0.0,
                               skipped=skipped, seed=seed)
    report.details["tolerance_formula"] = "1e-8 + 2*slope_error*d(x,y)"
    return report


def slope_estimate_check(f: ConvexFunctional, space: GeodesicSpace, trials: int = 50,
                         seed: int = 0, rtol: float = 0.01, points=None) -> CheckReport:
    """Estimated lower slope against the exact slope at smooth points.

    Points where the exact slope is below ``1e-6`` (minimizers, anchors) are
    skipped, as are points of nonsmoothness of max-affine functionals.
    """
    if not f.has_exact_slope:
        raise DomainError(f"{f.kind} has no exact slope to compare against")
    f.check_space(space)
    rng = np.random.default_rng(seed)
    if points is None:
        points = [space.random_point(rng) for _ in range(trials)]
    rel, skipped = [], 0
    for i, x in enumerate(points):
        exact = f.slope(space, x)
        if exact < 1e-6 or (isinstance(f, MaxAffine) and len(f.active(x)) > 1):
            skipped += 1
            continue
        est = lower_slope_estimate(f, space, x, seed=seed + i)
        rel.append(abs(est.value - exact) / exact)
    report = inequality_report(f"slope_estimate[{f.kind}/{space.kind}]", rel,
                               np.zeros(len(rel)), rtol, skipped=skipped, seed=seed)
    return report
