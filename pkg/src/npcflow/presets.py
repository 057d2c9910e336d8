"""Named suites of run configs.

``paper-core`` holds one config per acceptance property (split per space
where a property spans several), ``geometry`` certifies the model spaces and
the convex-set toolkit, and ``convergence`` runs the long-time checks.
"""

from __future__ import annotations

import numpy as np

from .reports import DomainError

PRESETS = ("paper-core", "geometry", "convergence")


def random_spd(dim: int, condition: float, seed: int) -> list[list[float]]:
    """A seeded symmetric positive definite matrix with the given condition number."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    A = Q @ np.diag(np.geomspace(1.0, condition, dim)) @ Q.T
    return (0.5 * (A + A.T)).tolist()


def _cfg(name, space, checks, seed=0, functional=None, initial=None, flow=None, **extra):
    doc = {"schema_version": 1, "name": name, "seed": seed, "space": space, "checks": checks}
    if functional is not None:
        doc["functional"] = functional
    if initial is not None:
        doc["initial"] = initial
    if flow is not None:
        doc["flow"] = flow
    doc.update(extra)
    return doc


E1 = {"kind": "euclidean", "dim": 1}
E2 = {"kind": "euclidean", "dim": 2}
E3 = {"kind": "euclidean", "dim": 3}
H2 = {"kind": "hyperbolic", "dim": 2}
H3 = {"kind": "hyperbolic", "dim": 3}
S3 = {"kind": "spider", "legs": 3}
PROD = {"kind": "product", "factors": [E2, S3]}

QUAD1 = {"kind": "quadratic", "A": [[1.0]], "b": [0.0]}
QUAD3 = {"kind": "quadratic", "A": [[2.0, 0.5, 0.0], [0.5, 1.5, 0.2], [0.0, 0.2, 1.0]],
         "b": [1.0, -0.5, 0.25]}
QUAD3_ID = {"kind": "quadratic", "A": [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]], "b": [0.5, -1.0, 2.0]}
HSD_H2 = {"kind": "half_squared_distance", "anchor": [0.3, -0.4]}
HSD_S3 = {"kind": "half_squared_distance", "anchor": [0, 0.0]}
SCALED_S3 = {"kind": "scaled_distance", "c": 2.0, "anchor": [1, 1.5]}
BUSEMANN = {"kind": "busemann", "ideal": [1.0, 1.0, 0.0]}
MAXAFF = {"kind": "max_affine", "pieces": [[[1.0], 0.0], [[-1.0], 0.0]]}

X_H2 = [1.2, 0.7]
X_S3 = [2, 3.0]


def _paper_core():
    out = []
    for name, sp, tol in [("npc-euclidean-1", E1, 1e-12), ("npc-euclidean-2", E2, 1e-12),
                          ("npc-euclidean-5", {"kind": "euclidean", "dim": 5}, 1e-12),
                          ("npc-hyperbolic-2", H2, 1e-9), ("npc-hyperbolic-3", H3, 1e-9),
                          ("npc-spider-3", S3, 1e-9), ("npc-spider-5", {"kind": "spider", "legs": 5}, 1e-9),
                          ("npc-product", PROD, 1e-9)]:
        out.append(_cfg(f"c01-{name}", sp, [{"name": "npc_certify", "trials": 1000, "tolerance": tol}]))
    rng = np.random.default_rng(2)
    out.append(_cfg("c02-consistency", {"kind": "euclidean", "dim": 5},
                    [{"name": "consistency", "n_list": [64, 128, 256, 512, 1024, 2048, 4096],
                      "final_rel_tol": 1e-3}],
                    functional={"kind": "quadratic", "A": random_spd(5, 100.0, 1), "b": [0.0] * 5},
                    initial=rng.uniform(-3, 3, 5).tolist(), flow={"T": 1.0}))
    out.append(_cfg("c03-scalar-anchor", E1,
                    [{"name": "closed_form_point", "t": 1.0, "n": 64,
                      "expected": [(1.0 + 1.0 / 64) ** -64], "tol": 1e-12},
                     {"name": "closed_form_point", "t": 1.0, "n": 4096,
                      "expected": [float(np.exp(-1.0))], "tol": 1e-4},
                     {"name": "consistency", "n_list": [16, 32, 64],
                      "expected_errors": [1.13e-2, 5.7e-3, 2.9e-3]}],
                    functional=QUAD1, initial=[1.0], flow={"T": 1.0}))
    flows = [("quadratic", E3, QUAD3, [1.0, 2.0, -1.5]), ("hyperbolic", H2, HSD_H2, X_H2),
             ("spider", S3, HSD_S3, X_S3)]
    for tag, sp, fn, x0 in flows:
        out.append(_cfg(f"c04-evi-{tag}", sp, [{"name": "evi", "triples": 100}], functional=fn,
                        initial=x0, flow={"T": 1.0, "n_per_unit": 1024}))
    for tag, sp, fn, x0 in [("quadratic", E3, QUAD3_ID, [1.0, 2.0, -1.5])] + flows[1:]:
        out.append(_cfg(f"c05-contraction-{tag}", sp, [{"name": "contraction", "pairs": 50}],
                        functional=fn, initial=x0, flow={"T": 1.0, "n_per_unit": 256}))
    smooth = [("quadratic", E3, QUAD3, [1.0, 2.0, -1.5]), ("hyperbolic", H2, HSD_H2, X_H2),
              ("busemann", H2, BUSEMANN, [0.0, 0.0])]
    for tag, sp, fn, x0 in smooth:
        out.append(_cfg(f"c06-speed-{tag}", sp, [{"name": "speed_slope"}], functional=fn,
                        initial=x0, flow={"T": 1.0, "n_per_unit": 256}))
    for tag, sp, fn, x0 in smooth[:2]:
        out.append(_cfg(f"c07-dissipation-{tag}", sp, [{"name": "dissipation"}], functional=fn,
                        initial=x0, flow={"T": 1.0, "n_per_unit": 256}))
    out.append(_cfg("c07-dissipation-busemann", H2,
                    [{"name": "dissipation", "expected_drop": 5.0, "drop_rtol": 0.01}],
                    functional=BUSEMANN, initial=[0.0, 0.0], flow={"T": 5.0, "n_per_unit": 256}))
    for tag, sp, fn, x0 in flows:
        out.append(_cfg(f"c08-half-order-{tag}", sp, [{"name": "half_order", "samples": 129}],
                        functional=fn, initial=x0, flow={"T": 2.0, "n_per_unit": 256}))
    for tag, sp, fn, x0 in flows:
        out.append(_cfg(f"c09-infimum-{tag}", sp, [{"name": "infimum", "T_max": 50.0}],
                        functional=fn, initial=x0))
    out.append(_cfg("c09-infimum-busemann", H2,
                    [{"name": "infimum", "T_max": 20.0},
                     {"name": "unbounded_descent", "T": 20.0, "below": -10.0}],
                    functional=BUSEMANN, initial=[0.0, 0.0]))
    for tag, sp, fn in [("quadratic", E3, QUAD3), ("hyperbolic", H2, HSD_H2),
                        ("spider", S3, SCALED_S3), ("busemann", H2, BUSEMANN),
                        ("max-affine", E1, MAXAFF)]:
        out.append(_cfg(f"c10-chen-{tag}", sp, [{"name": "chen", "trials": 500},
                                                {"name": "slope_estimate", "trials": 50}],
                        functional=fn))
    out.extend(_geometry_sets("c11"))
    for tag, sp, fn, x0 in flows:
        out.append(_cfg(f"c12-bacak-{tag}", sp, [{"name": "bacak", "T_max": 50.0}],
                        functional=fn, initial=x0))
    return out


def _geometry_sets(prefix):
    hull2 = {"kind": "euclidean_convex_hull",
             "points": [[0, 0], [3, 0.5], [2.5, 2.5], [0.5, 3], [-1, 1.5]]}
    hull3 = {"kind": "euclidean_convex_hull",
             "points": [[0, 0, 0], [2, 0, 0], [0, 2, 0], [0, 0, 2], [1.5, 1.5, 1.5], [-1, 0.5, 0.5]]}
    sets = [("segment-euclidean", E2, {"kind": "segment", "points": [[-1, 0], [1, 0]]}),
            ("segment-hyperbolic", H2, {"kind": "segment", "points": [[-1, 0.5], [2, 1]]}),
            ("segment-spider", S3, {"kind": "segment", "points": [[1, 2.0], [2, 3.0]]}),
            ("ball-hyperbolic", H2, {"kind": "ball", "points": [[0.5, 0.5]], "radius": 1.0}),
            ("ball-spider", S3, {"kind": "ball", "points": [[1, 1.0]], "radius": 2.0}),
            ("hull-2", E2, hull2), ("hull-3", E3, hull3),
            ("subtree-spider", S3, {"kind": "spider_subtree", "legs": [[1, 5.0], [3, 2.0]]})]
    out = []
    for tag, sp, C in sets:
        out.append(_cfg(f"{prefix}-projection-{tag}", sp,
                        [{"name": "projection_obtuseness", "set": C, "trials": 500},
                         {"name": "projection_lipschitz", "set": C, "trials": 500},
                         {"name": "weak_limits_in_convex", "set": C}]))
    for d, sp in [(1, E1), (2, E2), (3, E3)]:
        out.append(_cfg(f"{prefix}-centers-euclidean-{d}", sp,
                        [{"name": "center_agreement"}, {"name": "weak_true_negative"}]))
    for tag, sp in [("hyperbolic", H2), ("spider", S3)]:
        out.append(_cfg(f"{prefix}-centers-{tag}", sp,
                        [{"name": "center_agreement"}, {"name": "weak_true_negative"}]))
    return out


def _geometry():
    out = []
    for tag, sp in [("euclidean", E3), ("hyperbolic", H2), ("spider", S3), ("product", PROD)]:
        out.append(_cfg(f"npc-{tag}", sp, [{"name": "npc_certify", "trials": 1000}]))
    out.extend(_geometry_sets("geo"))
    out.append(_cfg("lsc-hyperbolic", H2, [{"name": "weak_lsc"}], functional=HSD_H2))
    out.append(_cfg("lsc-spider", S3, [{"name": "weak_lsc"}], functional=SCALED_S3))
    return out


def _convergence():
    out = []
    for tag, sp, fn, x0 in [("quadratic", E3, QUAD3, [1.0, 2.0, -1.5]),
                            ("hyperbolic", H2, HSD_H2, X_H2), ("spider", S3, HSD_S3, X_S3),
                            ("product", PROD, {"kind": "half_squared_distance",
                                               "anchor": [[0.5, -0.5], [2, 1.0]]},
                             [[2.0, 1.0], [1, 3.0]])]:
        out.append(_cfg(f"conv-{tag}", sp, [{"name": "bacak", "T_max": 50.0},
                                            {"name": "infimum", "T_max": 50.0},
                                            {"name": "refinement"}],
                        functional=fn, initial=x0))
    out.append(_cfg("conv-busemann", H2, [{"name": "infimum", "T_max": 20.0},
                                          {"name": "unbounded_descent"}],
                    functional=BUSEMANN, initial=[0.0, 0.0]))
    return out


def preset_configs(name: str) -> list[dict]:
    """Config documents of a preset; unknown names raise with the available list."""
    if name == "paper-core":
        return _paper_core()
    if name == "geometry":
        return _geometry()
    if name == "convergence":
        return _convergence()
    raise DomainError(f"unknown preset {name!r}; available presets: {', '.join(PRESETS)}")
