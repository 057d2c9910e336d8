"""Minimizing movements ``x_t = lim W_{t/n}^n(x_0)`` and their theorem checks.

Trajectories are single uniform chains with step ``tau = 1 / n_per_unit``
sampled at grid nodes, so the discrete semigroup inequalities (EVI,
contraction, telescoping energy bound) hold exactly at recorded nodes up to
the resolvent tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from . import _kernels as K
from .functionals import (Busemann, ConvexFunctional, HalfSquaredDistance,
                          QuadraticForm, slope)
from .proximal import eps_prox, resolvent
from .reports import CheckReport, DomainError, inequality_report
from .spaces import Euclidean, GeodesicSpace, Hyperbolic


@dataclass
class Trajectory:
    times: np.ndarray
    points: list
    values: np.ndarray
    slopes: np.ndarray | None
    step_distances: np.ndarray
    tau: float | None
    stride: int
    scheme: str
    n_per_unit: int | None = None
    tol: float | None = None
    seed: int = 0
    uncertified_steps: int = 0
    details: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def provenance(self):
        if self.scheme == "minimizing_movement":
            return {"scheme": self.scheme, "n_per_unit": self.n_per_unit,
                    "tau": self.tau, "stride": self.stride, "seed": self.seed}
        return {"scheme": self.scheme, "tol": self.tol, "seed": self.seed}

    def index_of(self, t, atol=1e-9):
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > atol * max(1.0, abs(t)):
            raise DomainError(f"time {t} is not a node of the trajectory grid")
        return j


@dataclass
class ChainResult:
    points: list
    uncertified_steps: int


def _fast_chain(f, space, x0, tau, n):
    """All ``n + 1`` chain states via a compiled kernel, or ``None``."""
    if isinstance(f, QuadraticForm) and isinstance(space, Euclidean):
        P, q = f.resolvent_map(tau)
        return list(K.affine_chain(P, q, x0, n, 1))
    if isinstance(f, HalfSquaredDistance) and isinstance(space, Euclidean):
        d = space.dim
        P = np.eye(d) / (1.0 + tau)
        q = tau * np.asarray(f.anchor, dtype=float) / (1.0 + tau)
        return list(K.affine_chain(P, q, x0, n, 1))
    if isinstance(f, HalfSquaredDistance) and isinstance(space, Hyperbolic):
        return list(K.hyperbolic_anchor_chain(x0, f.anchor, tau / (1.0 + tau), n, 1))
    if isinstance(f, Busemann):
        return list(K.hyperbolic_busemann_chain(x0, f.ideal, tau, n, 1))
    return None


def mm_chain(f: ConvexFunctional, space: GeodesicSpace, x0, tau: float, n: int,
             method: str = "auto", seed: int = 0) -> ChainResult:
    """The states ``x0, W_tau x0, ..., W_tau^n x0``."""
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if n < 0:
        raise DomainError("n must be >= 0")
    f.check_space(space)
    x0 = space.validate(x0)
    if method == "auto":
        pts = _fast_chain(f, space, x0, tau, n)
        if pts is not None:
            return ChainResult(points=pts, uncertified_steps=0)
    pts = [x0]
    bad = 0
    x = x0
    for k in range(n):
        res = resolvent(f, space, x, tau, method=method, seed=seed + k)
        bad += not res.certified
        x = res.point
        pts.append(x)
    return ChainResult(points=pts, uncertified_steps=bad)


def mm_point(f: ConvexFunctional, space: GeodesicSpace, x0, t: float, n: int,
             method: str = "auto", seed: int = 0):
    """``W_{t/n}^n(x0)``; ``t = 0`` returns ``x0``."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if t == 0:
        f.check_space(space)
        return space.validate(x0)
    return mm_chain(f, space, x0, t / n, n, method=method, seed=seed).points[-1]


def _node_slopes(f, space, points, seed):
    out = np.empty(len(points))
    for i, p in enumerate(points):
        out[i] = slope(f, space, p, seed=seed + i)[0]
    return out


def _step_distances(space, points):
    d = np.zeros(len(points))
    if len(points) < 2:
        return d
    if isinstance(space, Hyperbolic):
        X = np.asarray(points)
        d[1:] = K.hyperbolic_distances(X[:-1], X[1:])
    elif isinstance(space, Euclidean):
        X = np.asarray(points)
        d[1:] = K.euclidean_distances(X[:-1], X[1:])
    else:
        d[1:] = [space.distance(a, b) for a, b in zip(points[:-1], points[1:])]
    return d


def mm_trajectory(f: ConvexFunctional, space: GeodesicSpace, x0, T: float,
                  samples: int | None = None, n_per_unit: int = 256,
                  with_slopes: bool = True, method: str = "auto",
                  seed: int = 0) -> Trajectory:
    """Run one chain with ``tau = 1/n_per_unit`` up to time ``T``.

    ``samples=None`` records every node; otherwise ``samples`` nodes nearest
    to an even time grid are kept.
    """
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    if samples is not None and samples < 2:
        raise DomainError("samples must be >= 2")
    if n_per_unit < 1:
        raise DomainError("n_per_unit must be >= 1")
    tau = 1.0 / n_per_unit
    N = int(round(T * n_per_unit))
    chain = mm_chain(f, space, x0, tau, N, method=method, seed=seed)
    if samples is None or samples >= N + 1:
        idx = np.arange(N + 1)
    else:
        idx = np.unique(np.round(np.linspace(0, N, samples)).astype(int))
    pts = [chain.points[i] for i in idx]
    strides = np.diff(idx)
    stride = int(strides[0]) if strides.size and np.all(strides == strides[0]) else 0
    values = np.array([f.value(space, p) for p in pts])
    slopes = _node_slopes(f, space, pts, seed) if with_slopes else None
    return Trajectory(times=idx * tau, points=pts, values=values, slopes=slopes,
                      step_distances=_step_distances(space, pts), tau=tau,
                      stride=stride, scheme="minimizing_movement",
                      n_per_unit=n_per_unit, seed=seed,
                      uncertified_steps=chain.uncertified_steps,
                      details={"node_indices": idx})


def smooth_flow(f: ConvexFunctional, space: GeodesicSpace, x0, T: float,
                tol: float = 1e-10, samples: int = 101) -> Trajectory:
    """Integrate ``x' = -grad f(x)`` on euclidean space with DOP853.

    Quadratic forms are cross-checked against the closed-form solution; the
    largest deviation is stored in ``details["closed_form_error"]``.
    """
    if not isinstance(space, Euclidean):
        raise DomainError("smooth_flow is only available on euclidean space")
    if not f.has_smooth_gradient:
        raise DomainError(f"{f.kind} has no smooth gradient")
    f.check_space(space)
    x0 = space.validate(x0)
    times = np.linspace(0.0, T, samples)
    sol = solve_ivp(lambda t, x: -f.gradient(space, x), (0.0, T), x0, method="DOP853",
                    t_eval=times, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise RuntimeError(f"smooth flow integration failed: {sol.message}")
    pts = [sol.y[:, i].copy() for i in range(samples)]
    details = {"nfev": int(sol.nfev)}
    if isinstance(f, QuadraticForm):
        exact = [f.exact_flow(x0, t) for t in times]
        details["closed_form_error"] = float(max(np.linalg.norm(p - e) for p, e in zip(pts, exact)))
    values = np.array([f.value(space, p) for p in pts])
    slopes = np.array([f.slope(space, p) for p in pts]) if f.has_exact_slope else None
    return Trajectory(times=times, points=pts, values=values, slopes=slopes,
                      step_distances=_step_distances(space, pts), tau=None, stride=1,
                      scheme="smooth_ode", tol=tol, details=details)


@dataclass
class ConsistencyReport:
    n_values: list[int]
    errors: list[float]
    orders: list[float]
    fitted_order: float | None
    monotone: bool
    reference_error: float | None = None

    def to_dict(self):
        return {"n_values": self.n_values, "errors": self.errors, "orders": self.orders,
                "fitted_order": self.fitted_order, "monotone": self.monotone,
                "reference_error": self.reference_error}


def consistency_report(f: ConvexFunctional, space: GeodesicSpace, x0, T: float,
                       n_list, samples: int = 17, tol: float = 1e-12) -> ConsistencyReport:
    """Sup-over-grid distance between minimizing movement and the smooth flow.

    The sample grid is ``samples`` evenly spaced times in ``[0, T]``; each
    ``n`` (steps per unit time) is run as one chain and read at the nodes
    nearest to those times.
    """
    n_list = sorted(int(n) for n in n_list)
    ref = smooth_flow(f, space, x0, T, tol=tol, samples=samples)
    errors = []
    for n in n_list:
        N = int(round(T * n))
        chain = mm_chain(f, space, x0, 1.0 / n, N).points
        err = 0.0
        for t, p in zip(ref.times, ref.points):
            err = max(err, space.distance(chain[int(round(t * n))], p))
        errors.append(float(err))
    orders = []
    for (n1, e1), (n2, e2) in zip(zip(n_list, errors), zip(n_list[1:], errors[1:])):
        orders.append(float(math.log(e1 / e2) / math.log(n2 / n1)) if e1 > 0 and e2 > 0 else float("nan"))
    fitted = None
    if len(n_list) >= 3 and all(e > 0 for e in errors):
        slope_, _ = np.polyfit(np.log(n_list), np.log(errors), 1)
        fitted = float(-slope_)
    monotone = all(b < a for a, b in zip(errors, errors[1:])) or all(e == 0 for e in errors)
    return ConsistencyReport(n_values=n_list, errors=errors,
                             orders=orders if len(n_list) >= 3 else [],
                             fitted_order=fitted, monotone=monotone,
                             reference_error=ref.details.get("closed_form_error"))


# -- checks ----------------------------------------------------------------------

def evi_check(traj: Trajectory, f: ConvexFunctional, space: GeodesicSpace,
              witnesses, pairs, slack_factor: float = 4.0) -> CheckReport:
    """``d^2(x_{t+s}, w) <= d^2(x_t, w) - 2 s (f(x_{t+s}) - f(w))``.

    ``pairs`` holds ``(t, s)`` with ``t`` and ``t + s`` on the trajectory grid
    and is zipped with ``witnesses``.  Slack per pair is
    ``slack_factor * eps_prox * steps * (1 + diameter)``.
    """
    if traj.tau is None:
        raise DomainError("evi_check needs a minimizing-movement trajectory")
    lhs, rhs = [], []
    for w, (t, s) in zip(witnesses, pairs):
        if s < 0:
            raise DomainError("s must be >= 0")
        w = space.validate(w)
        i, j = traj.index_of(t), traj.index_of(t + s)
        steps = int(round((traj.times[j] - traj.times[i]) / traj.tau))
        s_grid = steps * traj.tau
        di, dj = space.distance(traj.points[i], w), space.distance(traj.points[j], w)
        fw = f.value(space, w)
        slack = slack_factor * eps_prox(traj.tau) * steps * (1.0 + max(di, dj))
        roundoff = 1e-13 * (1.0 + di * di + 2.0 * s_grid * (abs(traj.values[j]) + abs(fw)))
        lhs.append(dj * dj)
        rhs.append(di * di - 2.0 * s_grid * (traj.values[j] - fw) + slack + roundoff)
    return inequality_report(f"evi[{f.kind}/{space.kind}]", lhs, rhs, 0.0,
                             slack_formula="4*eps_prox*steps*(1+diam) + roundoff")


def distance_nonincreasing_check(f: ConvexFunctional, space: GeodesicSpace, x0, y0,
                                 T: float, n_per_unit: int = 256,
                                 method: str = "auto", seed: int = 0) -> CheckReport:
    """Paired chains with equal ``tau``: ``d(x_k, y_k)`` is nonincreasing."""
    tau = 1.0 / n_per_unit
    N = int(round(T * n_per_unit))
    xs = mm_chain(f, space, x0, tau, N, method=method, seed=seed).points
    ys = mm_chain(f, space, y0, tau, N, method=method, seed=seed + 10**6).points
    d = _pair_distances(space, xs, ys)
    tol = 4.0 * eps_prox(tau)
    report = inequality_report(f"distance_nonincreasing[{f.kind}/{space.kind}]",
                               d[1:], d[:-1], tol, tau=tau, steps=N)
    report.details["initial_distance"] = float(d[0])
    report.details["final_distance"] = float(d[-1])
    report.details["distances"] = d
    if isinstance(f, QuadraticForm):
        alpha = f.A[0, 0]
        if np.allclose(f.A, alpha * np.eye(f.dim), atol=0.0, rtol=0.0):
            k = np.arange(N + 1)
            expected = d[0] * (1.0 + tau * alpha) ** (-k)
            report.details["analytic_factor_error"] = float(np.max(np.abs(d - expected)))
    return report


def _pair_distances(space, xs, ys):
    if isinstance(space, Hyperbolic):
        return K.hyperbolic_distances(np.asarray(xs), np.asarray(ys))
    if isinstance(space, Euclidean):
        return K.euclidean_distances(np.asarray(xs), np.asarray(ys))
    return np.array([space.distance(a, b) for a, b in zip(xs, ys)])


def _traj_slopes(traj, f, space):
    if traj.slopes is not None:
        return traj.slopes
    return _node_slopes(f, space, traj.points, traj.seed)


def speed_slope_check(traj: Trajectory, f: ConvexFunctional, space: GeodesicSpace,
                      min_slope: float = 0.1, rtol: float = 0.05) -> CheckReport:
    """Per-step speed ``d(x_k, x_{k+1}) / tau`` against the slope at ``x_{k+1}``."""
    if traj.tau is None or traj.stride != 1:
        raise DomainError("speed_slope_check needs consecutive chain nodes (stride 1)")
    slopes = _traj_slopes(traj, f, space)
    speed = traj.step_distances[1:] / traj.tau
    s_new = slopes[1:]
    mask = s_new > min_slope
    rel = np.abs(speed[mask] - s_new[mask]) / s_new[mask]
    report = inequality_report(f"speed_slope[{f.kind}/{space.kind}]", rel,
                               np.zeros_like(rel), rtol)
    report.details["skipped_low_slope_nodes"] = int(np.sum(~mask))
    if np.any(~mask):
        report.details["max_abs_gap_low_slope"] = float(np.max(np.abs(speed[~mask] - s_new[~mask])))
    return report


def dissipation_check(traj: Trajectory, f: ConvexFunctional, space: GeodesicSpace,
                      rtol: float = 0.02) -> CheckReport:
    """Energy drop ``f(x_0) - f(x_T)`` against the trapezoid integral of ``slope^2``."""
    slopes = _traj_slopes(traj, f, space)
    drop = float(traj.values[0] - traj.values[-1])
    integral = float(trapezoid(slopes ** 2, traj.times))
    scale = max(abs(drop), abs(integral))
    rel = abs(drop - integral) / scale if scale > 1e-12 else 0.0
    report = inequality_report(f"dissipation[{f.kind}/{space.kind}]", [rel], [0.0], rtol)
    report.details.update(energy_drop=drop, slope_integral=integral, relative_error=rel)
    return report


def _pairwise(space, points):
    if isinstance(space, Hyperbolic):
        return K.pairwise_hyperbolic(np.asarray(points))
    if isinstance(space, Euclidean):
        return K.pairwise_euclidean(np.asarray(points))
    return space.pairwise_distances(points)


def half_order_distance_check(traj: Trajectory, f: ConvexFunctional,
                              space: GeodesicSpace) -> CheckReport:
    """``d(x_s, x_t) <= sqrt(2 (t-s)(f(x_s) - f(x_t))) <= sqrt(2 (t-s)(f(x_0) - inf f))``.

    Checked over every grid pair ``s < t`` with slack ``4 eps_prox * steps``.
    """
    if traj.tau is None:
        raise DomainError("half_order_distance_check needs a minimizing-movement trajectory")
    D = _pairwise(space, traj.points)
    t = traj.times
    i, j = np.triu_indices(len(t), k=1)
    dt = t[j] - t[i]
    steps = np.round(dt / traj.tau)
    slack = 4.0 * eps_prox(traj.tau) * steps
    drop = np.maximum(traj.values[i] - traj.values[j], 0.0)
    bound_local = np.sqrt(2.0 * dt * drop)
    lhs = D[i, j]
    inf = f.infimum(space)
    if inf is not None and math.isfinite(inf):
        bound_global = np.sqrt(2.0 * dt * max(traj.values[0] - inf, 0.0))
        rhs = np.minimum(bound_local, bound_global) + slack
    else:
        bound_global = None
        rhs = bound_local + slack
    report = inequality_report(f"half_order[{f.kind}/{space.kind}]", lhs, rhs, 0.0,
                               bounded_below=bound_global is not None)
    if bound_global is not None:
        report.details["local_exceeds_global"] = int(np.sum(bound_local > bound_global + slack))
    return report


def infimum_realization_check(f: ConvexFunctional, space: GeodesicSpace, x0,
                              T_max: float, n_per_unit: int = 64,
                              eps_energy: float = 1e-4, eps_slope: float = 1e-2,
                              slope_rtol: float = 0.01) -> CheckReport:
    """Values approach ``inf f`` and slopes approach ``inf |slope|``.

    With a minimizer: ``f(x_T) - inf f <= eps_energy`` and ``slope(x_T) <=
    eps_slope``.  Without one (Busemann): ``slope(x_T)`` within ``slope_rtol``
    of the known slope infimum.
    """
    f.check_space(space)
    if T_max == 0:
        xT = space.validate(x0)
    else:
        xT = mm_point(f, space, x0, T_max, max(1, int(round(T_max * n_per_unit))))
    sT = slope(f, space, xT)[0]
    inf = f.infimum(space)
    details = {"T_max": T_max, "final_slope": sT, "final_value": f.value(space, xT)}
    if inf is not None and math.isfinite(inf):
        gap = f.value(space, xT) - inf
        details["energy_gap"] = gap
        worst = max(gap - eps_energy, sT - eps_slope)
        passed = gap <= eps_energy and sT <= eps_slope
        tol = 0.0
    else:
        target = f.slope_infimum(space)
        if target is None:
            raise DomainError(f"{f.kind}: neither infimum nor slope infimum is known")
        rel = abs(sT - target) / max(target, 1e-300)
        details["slope_infimum"] = target
        worst, tol, passed = rel, slope_rtol, rel <= slope_rtol
    return CheckReport(name=f"infimum_realization[{f.kind}/{space.kind}]", trials=1,
                       worst_violation=float(worst), tolerance=tol, passed=bool(passed),
                       details=details)


def stationarity_check(f: ConvexFunctional, space: GeodesicSpace, x0,
                       t_values=(0.5, 2.0, 10.0), n_values=(1, 4, 16, 64)) -> CheckReport:
    """A point of zero slope is fixed: ``d(x0, W_{t/n}^n x0) <= n * 2 eps_prox``."""
    f.check_space(space)
    x0 = space.validate(x0)
    s0 = slope(f, space, x0)[0]
    if s0 > 1e-10:
        raise DomainError(f"stationarity_check needs a zero-slope start (slope {s0:.3g})")
    lhs, rhs = [], []
    for t in t_values:
        for n in n_values:
            lhs.append(space.distance(x0, mm_point(f, space, x0, t, n)))
            rhs.append(n * 2.0 * eps_prox(t / n))
    return inequality_report(f"stationarity[{f.kind}/{space.kind}]", lhs, rhs, 0.0)


def refinement_check(f: ConvexFunctional, space: GeodesicSpace, x0, t: float,
                     n_list=(16, 32, 64, 128, 256)) -> CheckReport:
    """Dyadic Cauchy differences ``d(mm(t, n), mm(t, 2n))`` decrease in ``n``."""
    n_list = sorted(n_list)
    pts = {n: mm_point(f, space, x0, t, n) for n in set(n_list) | {2 * n for n in n_list}}
    diffs = np.array([space.distance(pts[n], pts[2 * n]) for n in n_list])
    report = inequality_report(f"refinement[{f.kind}/{space.kind}]", diffs[1:], diffs[:-1],
                               1e-14, n_values=list(n_list))
    report.details["cauchy_differences"] = diffs
    return report


def trajectory_invariants_check(traj: Trajectory, f: ConvexFunctional,
                                space: GeodesicSpace) -> CheckReport:
    """Values and slopes nonincreasing; ``d^2(x_k, x_{k+m}) <= 2 m tau (f_k - f_{k+m})``."""
    if traj.tau is None:
        raise DomainError("needs a minimizing-movement trajectory")
    idx = np.asarray(traj.details.get("node_indices", np.arange(len(traj))))
    m = np.diff(idx)
    e = eps_prox(traj.tau)
    v = traj.values
    value_gap = (v[1:] - v[:-1]) - 2.0 * e * m - 1e-13 * (1.0 + np.abs(v[:-1]))
    d2 = traj.step_distances[1:] ** 2
    tele_gap = d2 - (2.0 * m * traj.tau * (v[:-1] - v[1:]) + 1e-8)
    gaps = [value_gap, tele_gap]
    if traj.slopes is not None:
        s = traj.slopes
        gaps.append((s[1:] - s[:-1]) - 1e-9 * (1.0 + s[:-1]))
    allg = np.concatenate(gaps)
    report = inequality_report(f"trajectory_invariants[{f.kind}/{space.kind}]", allg,
                               np.zeros_like(allg), 0.0)
    report.details.update(value_worst=float(np.max(value_gap, initial=-np.inf)),
                          telescoping_worst=float(np.max(tele_gap, initial=-np.inf)))
    return report
