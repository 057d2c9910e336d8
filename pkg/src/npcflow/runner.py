"""Execute validated run configs and suites; write artifacts and manifests."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import _kernels
from . import flow as F
from . import functionals as FN
from . import proximal as PX
from . import weak as W
from .config import RunConfig, validate_config
from .export import write_json, write_trajectory_csv, write_trajectory_json
from .reports import CheckReport, DomainError, inequality_report
from .spaces import npc_certify

OUTPUT_ENV = "NPCFLOW_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "npcflow-runs"
MANIFEST_SCHEMA = 1


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_ROOT)


@dataclass
class RunManifest:
    name: str
    config: dict
    status: str
    reports: list[CheckReport]
    timings: dict
    artifacts: list[str]
    run_dir: str | None = None
    version: str = __version__
    backend: str = _kernels.BACKEND

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"schema_version": MANIFEST_SCHEMA, "name": self.name, "version": self.version,
                "backend": self.backend, "status": self.status, "config": self.config,
                "reports": [r.to_dict() for r in self.reports], "artifacts": self.artifacts,
                "timings": self.timings}


class _Context:
    """Lazily computed shared state for one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.space = cfg.space
        self.f = cfg.functional
        self.rng = np.random.default_rng(cfg.seed)
        self._traj = None

    @property
    def trajectory(self):
        if self._traj is None:
            fl = self.cfg.flow
            self._traj = F.mm_trajectory(self.f, self.space, self.cfg.initial, fl["T"],
                                         samples=fl["samples"], n_per_unit=fl["n_per_unit"],
                                         method=fl["method"], seed=self.cfg.seed)
        return self._traj

    def full_trajectory(self):
        """Every chain node (stride 1), reusing the main trajectory when possible."""
        if self.cfg.flow["samples"] is None:
            return self.trajectory
        fl = self.cfg.flow
        return F.mm_trajectory(self.f, self.space, self.cfg.initial, fl["T"], samples=None,
                               n_per_unit=fl["n_per_unit"], method=fl["method"],
                               seed=self.cfg.seed)


def _rejudge(report: CheckReport, tol: float) -> CheckReport:
    report.tolerance = float(tol)
    report.passed = bool(math.isfinite(report.worst_violation) and report.worst_violation <= tol)
    return report


# -- check implementations -----------------------------------------------------

def _c_npc_certify(ctx, o):
    r = npc_certify(ctx.space, trials=o["trials"], seed=ctx.cfg.seed)
    return _rejudge(r, o["tolerance"]) if o["tolerance"] is not None else r


def _c_convexity(ctx, o):
    return FN.convexity_certify(ctx.f, ctx.space, trials=o["trials"], seed=ctx.cfg.seed)


def _c_chen(ctx, o):
    return FN.chen_inequality_check(ctx.f, ctx.space, trials=o["trials"], seed=ctx.cfg.seed)


def _c_slope_estimate(ctx, o):
    return FN.slope_estimate_check(ctx.f, ctx.space, trials=o["trials"], seed=ctx.cfg.seed,
                                   rtol=o["rtol"])


def _c_resolvent_optimality(ctx, o):
    x = ctx.cfg.initial if ctx.cfg.initial is not None else ctx.space.random_point(ctx.rng)
    return PX.resolvent_optimality_check(ctx.f, ctx.space, x, o["tau"], probes=o["probes"],
                                         seed=ctx.cfg.seed)


def _c_resolvent_contraction(ctx, o):
    return PX.resolvent_contraction_check(ctx.f, ctx.space, trials=o["trials"], tau=o["tau"],
                                          seed=ctx.cfg.seed)


def _c_slope_monotone(ctx, o):
    return PX.slope_monotone_check(ctx.f, ctx.space, trials=o["trials"], tau=o["tau"],
                                   seed=ctx.cfg.seed)


def _c_closed_form_point(ctx, o):
    got = F.mm_point(ctx.f, ctx.space, ctx.cfg.initial, o["t"], o["n"])
    expected = ctx.space.from_coords(o["expected"])
    d = ctx.space.distance(got, expected)
    r = inequality_report(f"closed_form_point[{ctx.f.kind}/{ctx.space.kind}]", [d], [0.0],
                          o["tol"], t=o["t"], n=o["n"])
    r.details["point"] = ctx.space.to_coords(got)
    return r


def _c_consistency(ctx, o):
    rep = F.consistency_report(ctx.f, ctx.space, ctx.cfg.initial, ctx.cfg.flow["T"],
                               o["n_list"], samples=o["samples"])
    order = rep.fitted_order if rep.fitted_order is not None else (
        rep.orders[-1] if rep.orders else float("nan"))
    problems = []
    if not rep.monotone:
        problems.append("errors not monotone decreasing")
    if len(rep.n_values) >= 3 and not o["order_min"] <= order <= o["order_max"]:
        problems.append(f"order {order:.4f} outside [{o['order_min']}, {o['order_max']}]")
    worst = 0.0
    x0n = float(np.linalg.norm(ctx.space.to_coords(ctx.cfg.initial)))
    if o["final_rel_tol"] is not None:
        bound = o["final_rel_tol"] * x0n
        worst = rep.errors[-1] - bound
        if rep.errors[-1] > bound:
            problems.append(f"final error {rep.errors[-1]:.3e} > {bound:.3e}")
    if o["expected_errors"] is not None:
        exp = np.asarray(o["expected_errors"], dtype=float)
        rel = np.abs(np.asarray(rep.errors) - exp) / exp
        if exp.shape != rel.shape or np.any(rel > o["expected_rtol"]):
            problems.append(f"errors {rep.errors} differ from expected {list(exp)}")
    return CheckReport(name=f"consistency[{ctx.f.kind}/{ctx.space.kind}]",
                       trials=len(rep.n_values), worst_violation=float(worst), tolerance=0.0,
                       passed=not problems,
                       details={**rep.to_dict(), "observed_order": order, "problems": problems})


def _c_evi(ctx, o):
    traj = ctx.trajectory
    times = traj.times
    witnesses, pairs = [], []
    for _ in range(o["triples"]):
        i, j = sorted(ctx.rng.integers(0, len(times), size=2))
        witnesses.append(ctx.space.random_point(ctx.rng))
        pairs.append((float(times[i]), float(times[j] - times[i])))
    return F.evi_check(traj, ctx.f, ctx.space, witnesses, pairs)


def _c_contraction(ctx, o):
    fl = ctx.cfg.flow
    reports = []
    pairs = [(ctx.cfg.initial, ctx.cfg.initial_pair)] if ctx.cfg.initial_pair is not None else []
    while len(pairs) < o["pairs"]:
        pairs.append((ctx.space.random_point(ctx.rng), ctx.space.random_point(ctx.rng)))
    analytic = []
    for k, (x, y) in enumerate(pairs):
        r = F.distance_nonincreasing_check(ctx.f, ctx.space, x, y, fl["T"],
                                           n_per_unit=fl["n_per_unit"], method=fl["method"],
                                           seed=ctx.cfg.seed + k)
        reports.append(r)
        if "analytic_factor_error" in r.details:
            analytic.append(r.details["analytic_factor_error"])
    worst = max(r.worst_violation for r in reports)
    tol = reports[0].tolerance
    ok = all(r.passed for r in reports)
    details = {"pairs": len(pairs), "steps": reports[0].details.get("steps")}
    if analytic:
        details["analytic_factor_error"] = max(analytic)
        ok = ok and max(analytic) <= o["analytic_tol"]
    return CheckReport(name=f"contraction[{ctx.f.kind}/{ctx.space.kind}]",
                       trials=sum(r.trials for r in reports), worst_violation=worst,
                       tolerance=tol, passed=ok, details=details)


def _c_speed_slope(ctx, o):
    return F.speed_slope_check(ctx.full_trajectory(), ctx.f, ctx.space,
                               min_slope=o["min_slope"], rtol=o["rtol"])


def _c_dissipation(ctx, o):
    r = F.dissipation_check(ctx.trajectory, ctx.f, ctx.space, rtol=o["rtol"])
    if o["expected_drop"] is not None:
        exp = float(o["expected_drop"])
        for key in ("energy_drop", "slope_integral"):
            rel = abs(r.details[key] - exp) / abs(exp)
            r.details[f"{key}_vs_expected"] = rel
            if rel > o["drop_rtol"]:
                r.passed = False
    return r


def _c_half_order(ctx, o):
    fl = ctx.cfg.flow
    traj = F.mm_trajectory(ctx.f, ctx.space, ctx.cfg.initial, fl["T"], samples=o["samples"],
                           n_per_unit=fl["n_per_unit"], with_slopes=False, method=fl["method"],
                           seed=ctx.cfg.seed)
    return F.half_order_distance_check(traj, ctx.f, ctx.space)


def _c_invariants(ctx, o):
    return F.trajectory_invariants_check(ctx.trajectory, ctx.f, ctx.space)


def _c_refinement(ctx, o):
    return F.refinement_check(ctx.f, ctx.space, ctx.cfg.initial, o["t"], n_list=o["n_list"])


def _c_infimum(ctx, o):
    return F.infimum_realization_check(ctx.f, ctx.space, ctx.cfg.initial, o["T_max"],
                                       n_per_unit=o["n_per_unit"], eps_energy=o["eps_energy"],
                                       eps_slope=o["eps_slope"], slope_rtol=o["slope_rtol"])


def _c_stationarity(ctx, o):
    x0 = ctx.f.minimizer(ctx.space) if ctx.cfg.initial is None else ctx.cfg.initial
    if x0 is None:
        raise DomainError("stationarity needs an initial point or a known minimizer")
    return F.stationarity_check(ctx.f, ctx.space, x0, t_values=o["t_values"],
                                n_values=o["n_values"])


def _c_unbounded_descent(ctx, o):
    x = F.mm_point(ctx.f, ctx.space, ctx.cfg.initial, o["T"], int(round(o["T"] * o["n_per_unit"])))
    v = ctx.f.value(ctx.space, x)
    return inequality_report(f"unbounded_descent[{ctx.f.kind}/{ctx.space.kind}]", [v],
                             [o["below"]], 0.0, final_value=v, T=o["T"])


def _c_projection_obtuseness(ctx, o):
    return W.projection_obtuseness_check(ctx.space, o["set"], trials=o["trials"],
                                         seed=ctx.cfg.seed)


def _c_projection_lipschitz(ctx, o):
    return W.projection_lipschitz_check(ctx.space, o["set"], trials=o["trials"],
                                        seed=ctx.cfg.seed)


def _c_convex_membership(ctx, o):
    return W.convexity_membership_check(ctx.space, o["set"], trials=o["trials"],
                                        seed=ctx.cfg.seed)


def _random_cloud(space, rng, length):
    c = space.random_point(rng)
    return [space.random_near(rng, c, rng.uniform(0.1, 3.0)) for _ in range(length)]


def _c_center_agreement(ctx, o):
    """Default solver vs descent from two starts, on random finite clouds."""
    gaps = []
    for _ in range(o["sequences"]):
        pts = _random_cloud(ctx.space, ctx.rng, o["length"])
        seq = W.PointSequence(ctx.space, pts, tail_fraction=1.0)
        a = W.asymptotic_center(seq, doublings=0)
        b = W.asymptotic_center(seq, method="descent", doublings=0)
        c = W.asymptotic_center(seq, method="descent", start=pts[-1], doublings=0)
        gaps.append(max(ctx.space.distance(a.center, b.center),
                        ctx.space.distance(b.center, c.center)))
    return inequality_report(f"center_agreement[{ctx.space.kind}]", gaps, np.zeros(len(gaps)),
                             o["tol"])


def _c_weak_true_negative(ctx, o):
    """An oscillating sequence must fail the projection test; a convergent one must pass."""
    space = ctx.space
    x = space.random_point(ctx.rng)
    z = space.random_near(ctx.rng, x, 1.0)
    line = W.geodesic_line(space, x, z, 1.0)
    a, b = line.points
    osc = W.PointSequence(space, [a if k % 2 else b for k in range(o["length"])])
    neg = W.weak_convergence_check(osc, x, [z])
    conv = W.PointSequence(space, [space.random_near(ctx.rng, x, 0.5 ** k)
                                   for k in range(o["length"])])
    pos = W.weak_convergence_check(conv, x, [z, space.random_point(ctx.rng)])
    ok = (not neg.passed) and pos.passed
    return CheckReport(name=f"weak_true_negative[{space.kind}]", trials=2,
                       worst_violation=0.0 if ok else 1.0, tolerance=0.0, passed=ok,
                       details={"oscillating": neg.to_dict(), "convergent": pos.to_dict()})


def _convergent_sequence(space, rng, length, limit=None):
    a = space.random_point(rng) if limit is None else limit
    return a, [space.random_near(rng, a, 2.0 * 0.5 ** k) for k in range(length)]


def _c_weak_lsc(ctx, o):
    reports = []
    for _ in range(o["sequences"]):
        _, pts = _convergent_sequence(ctx.space, ctx.rng, o["length"])
        reports.append(W.weak_lsc_check(ctx.f, ctx.space, W.PointSequence(ctx.space, pts)))
    return _merge(f"weak_lsc[{ctx.f.kind}/{ctx.space.kind}]", reports)


def _c_weak_limits_in_convex(ctx, o):
    C = o["set"]
    reports = []
    for _ in range(o["sequences"]):
        a = C.random_member(ctx.space, ctx.rng)
        pts = [a]
        for k in range(1, o["length"]):
            pts.append(ctx.space.geodesic(a, C.random_member(ctx.space, ctx.rng), 0.5 ** k))
        reports.append(W.weak_limits_in_convex_check(ctx.space, C, W.PointSequence(ctx.space, pts)))
    return _merge(f"weak_limits_in_convex[{C.kind}/{ctx.space.kind}]", reports)


def _c_bacak(ctx, o):
    return W.bacak_convergence_harness(ctx.f, ctx.space, ctx.cfg.initial, T_max=o["T_max"],
                                       n_per_unit=o["n_per_unit"], value_tol=o["value_tol"],
                                       center_tol=o["center_tol"])


def _merge(name, reports):
    return CheckReport(name=name, trials=sum(r.trials for r in reports),
                       worst_violation=max(r.worst_violation for r in reports),
                       tolerance=reports[0].tolerance, passed=all(r.passed for r in reports),
                       skipped=sum(r.skipped for r in reports),
                       details={"runs": len(reports)})


CHECKS = {name[3:]: fn for name, fn in globals().items() if name.startswith("_c_")}


# -- runs -----------------------------------------------------------------------

def run(cfg: RunConfig, output_root=None, write: bool = True,
        include_trajectory: bool | None = None) -> RunManifest:
    """Execute the checks of ``cfg`` in declared order and write its artifacts.

    The trajectory is written whenever one was computed (or when
    ``include_trajectory`` forces it).  Identical configs give byte-identical
    files apart from the ``timings`` field of the manifest.
    """
    ctx = _Context(cfg)
    reports, timings = [], {}
    for i, spec in enumerate(cfg.checks):
        t0 = time.perf_counter()
        try:
            rep = CHECKS[spec.name](ctx, spec.options)
        except DomainError as exc:
            rep = CheckReport(name=spec.name, trials=0, worst_violation=math.inf, tolerance=0.0,
                              passed=False, details={"error": str(exc)})
        timings[f"{i:02d}_{spec.name}"] = round(time.perf_counter() - t0, 6)
        reports.append(rep)
    if include_trajectory and cfg.initial is not None and cfg.functional is not None:
        t0 = time.perf_counter()
        ctx.trajectory
        timings["trajectory"] = round(time.perf_counter() - t0, 6)
    status = "pass" if all(r.passed for r in reports) else "fail"
    manifest = RunManifest(name=cfg.name, config=cfg.raw, status=status, reports=reports,
                           timings=timings, artifacts=[])
    if write:
        root = Path(output_root) if output_root is not None else default_output_root()
        run_dir = Path(cfg.output_dir) if cfg.output_dir else root / cfg.name
        arts = []
        traj = ctx._traj
        if traj is not None and include_trajectory is not False:
            desc = cfg.functional.descriptor(cfg.space)
            write_trajectory_csv(run_dir / "trajectory.csv", traj, cfg.space)
            write_trajectory_json(run_dir / "trajectory.json", traj, cfg.space, desc, cfg.seed)
            arts += ["trajectory.csv", "trajectory.json"]
        write_json(run_dir / "reports.json", [r.to_dict() for r in reports])
        arts += ["reports.json", "manifest.json"]
        manifest.artifacts = arts
        manifest.run_dir = str(run_dir)
        write_json(run_dir / "manifest.json", manifest.to_dict())
    return manifest


def _run_doc(args):
    doc, root = args
    return run(validate_config(doc), output_root=root)


def suite(preset: str, output_root=None, jobs: int = 1) -> list[RunManifest]:
    """Run every config of a named preset (see :mod:`npcflow.presets`)."""
    from .presets import preset_configs

    docs = preset_configs(preset)
    root = Path(output_root) if output_root is not None else default_output_root()
    root = root / f"suite-{preset}"
    for d in docs:
        validate_config(d)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_doc, [(d, root) for d in docs]))
    return [_run_doc((d, root)) for d in docs]
