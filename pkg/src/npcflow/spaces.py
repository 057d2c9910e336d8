"""Model NPC (CAT(0)) spaces with exact distances and geodesics.

Points are plain values: 1-D float arrays for euclidean space, ``(d+1)``
arrays on the upper sheet of the hyperboloid for hyperbolic space,
:class:`SpiderPoint` tuples for spiders and 2-tuples of factor points for
products.  Spaces are immutable; every method is a pure function.
"""

from __future__ import annotations

import math
from typing import Any, NamedTuple

import numpy as np

from . import _kernels as K
from .reports import CheckReport, DomainError, inequality_report

NPC_TOLERANCE = 1e-9
DEGENERATE_LENGTH = 1e-14


class SpiderPoint(NamedTuple):
    leg: int
    radius: float


HUB = SpiderPoint(0, 0.0)


class GeodesicSpace:
    """Common interface of the model spaces."""

    kind: str = "abstract"
    has_charts = False

    def __init__(self, box_radius: float = 10.0):
        if not box_radius > 0:
            raise DomainError("box_radius must be positive")
        self.box_radius = float(box_radius)

    # -- metric structure -------------------------------------------------
    def distance(self, x, y) -> float:
        raise NotImplementedError

    def geodesic(self, x, y, t: float):
        raise NotImplementedError

    def validate(self, x):
        """Return the canonical form of ``x`` or raise :class:`DomainError`."""
        raise NotImplementedError

    # -- sampling ---------------------------------------------------------
    def random_point(self, rng: np.random.Generator):
        raise NotImplementedError

    def random_near(self, rng: np.random.Generator, x, scale: float):
        """A random point at distance roughly ``scale`` from ``x``."""
        raise NotImplementedError

    # -- serialization ----------------------------------------------------
    def to_coords(self, x) -> list[float]:
        raise NotImplementedError

    def from_coords(self, coords):
        raise NotImplementedError

    def coord_names(self) -> list[str]:
        raise NotImplementedError

    def descriptor(self) -> dict[str, Any]:
        raise NotImplementedError

    # -- helpers shared by all spaces ---------------------------------------
    def point_at_distance(self, x, target, r: float):
        """The point at distance ``r`` from ``x`` on the geodesic toward ``target``.

        Clamped to ``target`` when the geodesic is shorter than ``r``.
        """
        L = self.distance(x, target)
        if L <= DEGENERATE_LENGTH:
            return x
        return self.geodesic(x, target, min(1.0, r / L))

    def same_point(self, x, y, tol: float = 0.0) -> bool:
        return self.distance(x, y) <= tol

    def distances_to(self, points, y) -> np.ndarray:
        return np.array([self.distance(p, y) for p in points])

    def pairwise_distances(self, points) -> np.ndarray:
        m = len(points)
        D = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                D[i, j] = D[j, i] = self.distance(points[i], points[j])
        return D

    def __eq__(self, other):
        return isinstance(other, GeodesicSpace) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(repr(self.descriptor()))

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class Euclidean(GeodesicSpace):
    kind = "euclidean"
    has_charts = True

    def __init__(self, dim: int, box_radius: float = 10.0):
        super().__init__(box_radius)
        if int(dim) < 1:
            raise DomainError("euclidean dimension must be >= 1")
        self.dim = int(dim)

    def distance(self, x, y):
        return float(np.linalg.norm(np.subtract(x, y)))

    def geodesic(self, x, y, t):
        if t == 0.0:
            return np.array(x, dtype=float)
        if t == 1.0:
            return np.array(y, dtype=float)
        return (1.0 - t) * np.asarray(x, dtype=float) + t * np.asarray(y, dtype=float)

    def extend(self, x, target):
        """The reflection of ``target`` through ``x`` (geodesic extension)."""
        return 2.0 * np.asarray(x) - np.asarray(target)

    def validate(self, x):
        if isinstance(x, (SpiderPoint, tuple)) and not isinstance(x, np.ndarray):
            raise DomainError(f"not a euclidean point: {x!r}")
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.shape != (self.dim,):
            raise DomainError(f"expected a {self.dim}-vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite coordinates")
        return arr

    def random_point(self, rng):
        return rng.uniform(-self.box_radius, self.box_radius, size=self.dim)

    def random_near(self, rng, x, scale):
        v = rng.standard_normal(self.dim)
        return np.asarray(x) + scale * v / max(np.linalg.norm(v), 1e-300)

    def chart_log(self, base, x):
        return np.asarray(x, dtype=float) - np.asarray(base, dtype=float)

    def chart_exp(self, base, v):
        return np.asarray(base, dtype=float) + np.asarray(v, dtype=float)

    def distances_to(self, points, y):
        if len(points) == 0:
            return np.zeros(0)
        X = np.asarray(points, dtype=float).reshape(len(points), self.dim)
        return np.sqrt(np.sum((X - np.asarray(y, dtype=float)) ** 2, axis=1))

    def to_coords(self, x):
        return [float(v) for v in np.asarray(x).reshape(-1)]

    def from_coords(self, coords):
        return self.validate(coords)

    def coord_names(self):
        return [f"x{i}" for i in range(self.dim)]

    def descriptor(self):
        return {"kind": "euclidean", "dim": self.dim}


def _lorentz_boost(c):
    """Symmetric boost sending ``c`` to the basepoint ``(1, 0, ..., 0)``."""
    c = np.asarray(c, dtype=float)
    c0, cs = c[0], c[1:]
    n = c.size
    B = np.empty((n, n))
    B[0, 0] = c0
    B[0, 1:] = -cs
    B[1:, 0] = -cs
    B[1:, 1:] = np.eye(n - 1) + np.outer(cs, cs) / (1.0 + c0)
    return B


class Hyperbolic(GeodesicSpace):
    """Hyperbolic space of curvature -1 in the hyperboloid model."""

    kind = "hyperbolic"
    has_charts = True

    def __init__(self, dim: int, box_radius: float = 10.0):
        super().__init__(box_radius)
        if int(dim) < 1:
            raise DomainError("hyperbolic dimension must be >= 1")
        self.dim = int(dim)

    @property
    def basepoint(self):
        o = np.zeros(self.dim + 1)
        o[0] = 1.0
        return o

    def distance(self, x, y):
        return K.hyperbolic_distance(x, y)

    def geodesic(self, x, y, t):
        if t == 0.0:
            return np.array(x, dtype=float)
        if t == 1.0:
            return np.array(y, dtype=float)
        return K.hyperbolic_geodesic(x, y, t, K.hyperbolic_distance(x, y))

    def extend(self, x, target):
        # geodesic parameter t = -1 of the segment x -> target
        z = 2.0 * math.cosh(self.distance(x, target)) * np.asarray(x) - np.asarray(target)
        return K.hyperbolic_lift(z[1:])

    def validate(self, x):
        if isinstance(x, (SpiderPoint, tuple)) and not isinstance(x, np.ndarray):
            raise DomainError(f"not a hyperboloid point: {x!r}")
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.shape != (self.dim + 1,):
            raise DomainError(f"expected a {self.dim + 1}-vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite coordinates")
        if arr[0] <= 0:
            raise DomainError("hyperboloid point must have x0 > 0")
        q = K.minkowski_dot(arr, arr)
        if abs(q + 1.0) > 1e-12 * max(1.0, arr[0] ** 2):
            raise DomainError(f"<x,x>_M = {q!r}, expected -1")
        return K.hyperbolic_lift(arr[1:])

    def lift(self, spatial):
        return K.hyperbolic_lift(spatial)

    def random_point(self, rng):
        return K.hyperbolic_lift(rng.uniform(-self.box_radius, self.box_radius, size=self.dim))

    def random_near(self, rng, x, scale):
        v = rng.standard_normal(self.dim)
        v *= scale / max(np.linalg.norm(v), 1e-300)
        return self.chart_exp(x, v)

    def chart_log(self, base, x):
        """Coordinates of ``log_base(x)`` in an orthonormal frame at ``base``."""
        y = _lorentz_boost(base) @ np.asarray(x, dtype=float)
        ys = y[1:]
        n = np.linalg.norm(ys)
        if n == 0.0:
            return np.zeros(self.dim)
        # at the basepoint |spatial part| = sinh(distance)
        return math.asinh(n) * ys / n

    def chart_exp(self, base, v):
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v)
        y = np.empty(self.dim + 1)
        if r == 0.0:
            y[0], y[1:] = 1.0, 0.0
        else:
            y[0] = math.cosh(r)
            y[1:] = math.sinh(r) * v / r
        # the boost is an involution up to the sign of its spatial block
        Binv = _lorentz_boost(base)
        Binv[0, 1:] *= -1.0
        Binv[1:, 0] *= -1.0
        return K.hyperbolic_lift((Binv @ y)[1:])

    def distances_to(self, points, y):
        if len(points) == 0:
            return np.zeros(0)
        X = np.asarray(points, dtype=float)
        return K.hyperbolic_distances(X, np.broadcast_to(y, X.shape))

    def pairwise_distances(self, points):
        return K.pairwise_hyperbolic(np.asarray(points, dtype=float))

    def to_coords(self, x):
        return [float(v) for v in np.asarray(x).reshape(-1)]

    def from_coords(self, coords):
        arr = np.asarray(coords, dtype=float).reshape(-1)
        if arr.shape == (self.dim,):
            return K.hyperbolic_lift(arr)
        return self.validate(arr)

    def coord_names(self):
        return [f"x{i}" for i in range(self.dim + 1)]

    def descriptor(self):
        return {"kind": "hyperbolic", "dim": self.dim}


class Spider(GeodesicSpace):
    """``legs`` copies of the half-line glued at a hub (a metric tree).

    Legs are numbered ``1..legs``; the hub is the unique point ``(0, 0.0)``.
    """

    kind = "spider"

    def __init__(self, legs: int, box_radius: float = 10.0):
        super().__init__(box_radius)
        if int(legs) < 1:
            raise DomainError("spider needs at least one leg")
        self.legs = int(legs)

    @staticmethod
    def point(leg, radius):
        radius = float(radius)
        if radius == 0.0:
            return HUB
        return SpiderPoint(int(leg), radius)

    def distance(self, x, y):
        if x.leg == y.leg:
            return abs(x.radius - y.radius)
        return x.radius + y.radius

    def geodesic(self, x, y, t):
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        if x.leg == y.leg:
            return self.point(x.leg, (1.0 - t) * x.radius + t * y.radius)
        s = t * (x.radius + y.radius)
        if s <= x.radius:
            return self.point(x.leg, x.radius - s)
        return self.point(y.leg, s - x.radius)

    def validate(self, x):
        try:
            leg, radius = x
            leg_i = int(leg)
            radius = float(radius)
        except (TypeError, ValueError):
            raise DomainError(f"not a spider point: {x!r}") from None
        if isinstance(x, np.ndarray) and x.dtype.kind == "f" and leg != leg_i:
            raise DomainError(f"leg index must be an integer: {leg!r}")
        if not math.isfinite(radius) or radius < 0:
            raise DomainError(f"spider radius must be finite and >= 0, got {radius}")
        if radius == 0.0:
            return HUB
        if not 1 <= leg_i <= self.legs:
            raise DomainError(f"leg {leg_i} outside 1..{self.legs}")
        return SpiderPoint(leg_i, radius)

    def random_point(self, rng):
        if rng.random() < 0.05:
            return HUB
        return SpiderPoint(int(rng.integers(1, self.legs + 1)),
                           float(rng.uniform(0.0, self.box_radius)) or 1e-3)

    def random_near(self, rng, x, scale):
        # walk a distance `scale` outward/inward, crossing the hub if needed
        step = float(rng.uniform(0.5, 1.0) * scale)
        if x.radius > 0 and rng.random() < 0.5:
            r = x.radius - step
            if r >= 0:
                return self.point(x.leg, r)
            return self.point(int(rng.integers(1, self.legs + 1)), -r)
        leg = x.leg if x.radius > 0 else int(rng.integers(1, self.legs + 1))
        return self.point(leg, x.radius + step)

    def to_coords(self, x):
        return [float(x.leg), float(x.radius)]

    def from_coords(self, coords):
        return self.validate(coords)

    def coord_names(self):
        return ["leg", "radius"]

    def descriptor(self):
        return {"kind": "spider", "legs": self.legs}


class Product(GeodesicSpace):
    """The l2 product of two geodesic spaces (NPC when both factors are)."""

    kind = "product"

    def __init__(self, first: GeodesicSpace, second: GeodesicSpace):
        super().__init__(min(first.box_radius, second.box_radius))
        self.factors = (first, second)

    def distance(self, x, y):
        a, b = self.factors
        return math.hypot(a.distance(x[0], y[0]), b.distance(x[1], y[1]))

    def geodesic(self, x, y, t):
        a, b = self.factors
        return (a.geodesic(x[0], y[0], t), b.geodesic(x[1], y[1], t))

    def validate(self, x):
        if isinstance(x, SpiderPoint) or not isinstance(x, (tuple, list)) or len(x) != 2:
            raise DomainError(f"product point must be a pair, got {x!r}")
        a, b = self.factors
        return (a.validate(x[0]), b.validate(x[1]))

    def random_point(self, rng):
        a, b = self.factors
        return (a.random_point(rng), b.random_point(rng))

    def random_near(self, rng, x, scale):
        a, b = self.factors
        w = rng.uniform(0.0, 1.0)
        return (a.random_near(rng, x[0], scale * math.sqrt(w)),
                b.random_near(rng, x[1], scale * math.sqrt(1.0 - w)))

    def to_coords(self, x):
        a, b = self.factors
        return a.to_coords(x[0]) + b.to_coords(x[1])

    def from_coords(self, coords):
        a, b = self.factors
        if len(coords) == 2 and isinstance(coords[0], (list, tuple, np.ndarray)):
            return (a.from_coords(coords[0]), b.from_coords(coords[1]))
        n = len(a.coord_names())
        return (a.from_coords(list(coords[:n])), b.from_coords(list(coords[n:])))

    def coord_names(self):
        a, b = self.factors
        return [f"p0_{c}" for c in a.coord_names()] + [f"p1_{c}" for c in b.coord_names()]

    def descriptor(self):
        return {"kind": "product", "factors": [f.descriptor() for f in self.factors]}


SPACE_KINDS = ("euclidean", "hyperbolic", "spider", "product")


def space_from_descriptor(desc: dict) -> GeodesicSpace:
    """Build a space from ``{"kind": ..., <parameters>}``; unknown keys are rejected."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise DomainError(f"space descriptor must be a mapping with 'kind': {desc!r}")
    kind = desc["kind"]
    allowed = {
        "euclidean": {"kind", "dim", "box_radius"},
        "hyperbolic": {"kind", "dim", "box_radius"},
        "spider": {"kind", "legs", "box_radius"},
        "product": {"kind", "factors"},
    }
    if kind not in allowed:
        raise DomainError(f"unknown space kind {kind!r}; expected one of {SPACE_KINDS}")
    extra = set(desc) - allowed[kind]
    if extra:
        raise DomainError(f"unknown keys for {kind} space: {sorted(extra)}")
    box = desc.get("box_radius", 10.0)
    try:
        if kind == "euclidean":
            return Euclidean(desc["dim"], box)
        if kind == "hyperbolic":
            return Hyperbolic(desc["dim"], box)
        if kind == "spider":
            return Spider(desc["legs"], box)
        factors = desc["factors"]
    except KeyError as exc:
        raise DomainError(f"{kind} space descriptor missing {exc.args[0]!r}") from None
    if not isinstance(factors, list) or len(factors) != 2:
        raise DomainError("product space needs exactly two factors")
    return Product(space_from_descriptor(factors[0]), space_from_descriptor(factors[1]))


def _check_point_kind(space, x):
    try:
        return space.validate(x)
    except DomainError:
        raise
    except Exception as exc:  # malformed payloads of a foreign kind
        raise DomainError(f"point {x!r} does not belong to {space!r}") from exc


def distance(space: GeodesicSpace, x, y) -> float:
    """Validated distance between two points of ``space``."""
    x = _check_point_kind(space, x)
    y = _check_point_kind(space, y)
    return space.distance(x, y)


def geodesic_point(space: GeodesicSpace, x, y, t: float):
    """Validated point ``gamma(t)`` on the geodesic from ``x`` to ``y``."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"geodesic parameter must lie in [0, 1], got {t}")
    x = _check_point_kind(space, x)
    y = _check_point_kind(space, y)
    return space.geodesic(x, y, t)


def comparison_gap(space, x, y, z, t) -> float:
    """Left minus right side of the CAT(0) comparison inequality."""
    g = space.geodesic(x, y, t)
    return space.distance(z, g) ** 2 - ((1 - t) * space.distance(z, x) ** 2
                                        + t * space.distance(z, y) ** 2
                                        - t * (1 - t) * space.distance(x, y) ** 2)


def npc_certify(space: GeodesicSpace, trials: int = 1000, seed: int = 0) -> CheckReport:
    """Sample quadruples ``(x, y, z, t)`` and report the worst comparison violation."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    xs = [space.random_point(rng) for _ in range(trials)]
    ys = [space.random_point(rng) for _ in range(trials)]
    zs = [space.random_point(rng) for _ in range(trials)]
    ts = rng.uniform(0.0, 1.0, size=trials)
    if isinstance(space, Euclidean):
        gaps = K.npc_gaps_euclidean(np.array(xs), np.array(ys), np.array(zs), ts)
    elif isinstance(space, Hyperbolic):
        gaps = K.npc_gaps_hyperbolic(np.array(xs), np.array(ys), np.array(zs), ts)
    else:
        gaps = np.array([comparison_gap(space, x, y, z, t) for x, y, z, t in zip(xs, ys, zs, ts)])
    report = inequality_report(f"npc_certify[{space.kind}]", gaps, np.zeros_like(gaps),
                               NPC_TOLERANCE, space=space.descriptor(), seed=seed)
    report.details["min_slack"] = float(-np.max(gaps))
    report.details["median_slack"] = float(-np.median(gaps))
    return report
