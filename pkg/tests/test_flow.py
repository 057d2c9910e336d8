import math

import numpy as np
import pytest

from npcflow.flow import (consistency_report, dissipation_check, distance_nonincreasing_check,
                          evi_check, half_order_distance_check, infimum_realization_check,
                          mm_chain, mm_point, mm_trajectory, refinement_check, smooth_flow,
                          speed_slope_check, stationarity_check, trajectory_invariants_check)
from npcflow.functionals import (Busemann, HalfSquaredDistance, MaxAffine, QuadraticForm,
                                 ScaledDistance)
from npcflow.presets import random_spd
from npcflow.reports import DomainError
from npcflow.spaces import HUB, Euclidean, Hyperbolic, Spider, SpiderPoint

from oracles import quadratic_chain, quadratic_exact, scalar_chain

E1, E2, E3, E5 = Euclidean(1), Euclidean(2), Euclidean(3), Euclidean(5)
H2, S3 = Hyperbolic(2), Spider(3)
QUAD1 = QuadraticForm([[1.0]], [0.0])
QUAD3 = QuadraticForm([[2.0, 0.5, 0.0], [0.5, 1.5, 0.2], [0.0, 0.2, 1.0]], [1.0, -0.5, 0.25])
HSD_H2 = HalfSquaredDistance(H2.lift([0.3, -0.4]))
HSD_S3 = HalfSquaredDistance(HUB)
BUSEMANN = Busemann([1.0, 1.0, 0.0])
X_H2 = H2.lift([1.2, 0.7])
X_S3 = SpiderPoint(2, 3.0)


# -- mm_point -----------------------------------------------------------------------

def test_scalar_chain_closed_form():
    x = mm_point(QUAD1, E1, np.array([1.0]), 1.0, 64)
    assert abs(x[0] - (1.0 + 1.0 / 64) ** -64) <= 1e-12


def test_scalar_chain_limit():
    x = mm_point(QUAD1, E1, np.array([1.0]), 1.0, 4096)
    assert abs(x[0] - math.exp(-1.0)) < 1e-4


def test_chain_matches_matrix_oracle(rng):
    x0 = rng.standard_normal(3)
    x = mm_point(QUAD3, E3, x0, 2.0, 50)
    np.testing.assert_allclose(x, quadratic_chain(QUAD3.A, QUAD3.b, x0, 2.0 / 50, 50),
                               atol=1e-13)


@pytest.mark.parametrize("f,space,m", [(QUAD3, E3, None), (HSD_S3, S3, HUB),
                                       (HSD_H2, H2, None)])
def test_minimizer_is_stationary(f, space, m):
    m = f.minimizer(space) if m is None else m
    for n in (1, 7, 64):
        assert space.distance(mm_point(f, space, m, 3.0, n), m) <= 1e-12


def test_time_zero_returns_start():
    np.testing.assert_array_equal(mm_point(QUAD3, E3, np.ones(3), 0.0, 5), np.ones(3))


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        mm_point(QUAD1, E1, [1.0], -1.0, 4)
    with pytest.raises(DomainError):
        mm_chain(QUAD1, E1, [1.0], 0.0, 4)


def test_fast_and_generic_chains_agree():
    # the compiled chain kernels against step-by-step resolvents
    for f, space, x0 in [(QUAD3, E3, np.array([1.0, 2.0, -1.5])), (HSD_H2, H2, X_H2),
                         (BUSEMANN, H2, H2.basepoint)]:
        fast = mm_chain(f, space, x0, 1 / 64, 64).points
        slow = [x0]
        for _ in range(64):
            slow.append(f.prox(space, slow[-1], 1 / 64))
        assert max(space.distance(a, b) for a, b in zip(fast, slow)) <= 1e-12


# -- trajectories --------------------------------------------------------------

def test_quadratic_r5_trajectory_reaches_minimum():
    A = np.array(random_spd(5, 10.0, 3)) * 3.0  # eigenvalues in [3, 30]
    f = QuadraticForm(A, np.arange(5.0))
    traj = mm_trajectory(f, E5, np.full(5, 2.0), 5.0, n_per_unit=256)
    assert np.all(np.diff(traj.values) < 0)
    assert traj.values[-1] - f.infimum(E5) <= 1e-10


def test_constant_functional_trajectory_is_constant():
    f = QuadraticForm(np.zeros((2, 2)), [0.0, 0.0])
    traj = mm_trajectory(f, E2, np.array([1.0, -2.0]), 1.0, n_per_unit=16)
    assert all(np.array_equal(p, [1.0, -2.0]) for p in traj.points)


def test_busemann_trajectory_unit_speed():
    traj = mm_trajectory(BUSEMANN, H2, H2.basepoint, 10.0, n_per_unit=64)
    assert traj.values[0] - traj.values[-1] == pytest.approx(10.0, abs=0.05)
    speeds = traj.step_distances[1:] / traj.tau
    # ambient coordinates grow like e^t, so far-out distances carry ~1e-6 rounding
    np.testing.assert_allclose(speeds[:64], 1.0, atol=1e-10)
    np.testing.assert_allclose(speeds, 1.0, atol=1e-5)
    # oracle: the explicit geodesic ray toward the ideal point
    ray = BUSEMANN.ray_point(H2.basepoint, 10.0)
    assert H2.distance(traj.points[-1], ray) <= 1e-8


def test_trajectory_sampling_and_provenance():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 2.0, samples=5, n_per_unit=8)
    np.testing.assert_allclose(traj.times, [0, 0.5, 1.0, 1.5, 2.0])
    assert traj.stride == 4
    assert traj.provenance["scheme"] == "minimizing_movement"
    assert traj.provenance["n_per_unit"] == 8
    assert traj.values[-1] == pytest.approx(0.5 * scalar_chain(1.0, 1 / 8, 16) ** 2, abs=1e-15)


def test_trajectory_rejects_bad_arguments():
    with pytest.raises(DomainError):
        mm_trajectory(QUAD1, E1, [1.0], 0.0)
    with pytest.raises(DomainError):
        mm_trajectory(QUAD1, E1, [1.0], 1.0, samples=1)


# -- smooth flow and consistency --------------------------------------------------

def test_smooth_flow_scalar():
    traj = smooth_flow(QUAD1, E1, np.array([1.0]), 1.0)
    assert abs(traj.points[-1][0] - math.exp(-1.0)) <= 1e-9


def test_smooth_flow_reaches_stationary_point():
    f = QuadraticForm(np.diag([1.0, 2.0]), [1.0, -1.0])
    traj = smooth_flow(f, E2, np.array([3.0, 3.0]), 30.0)
    assert np.linalg.norm(traj.points[-1] - np.array([1.0, -0.5])) < 1e-9


def test_smooth_flow_stiff_ratio():
    f = QuadraticForm(np.diag([1.0, 100.0]), [0.0, 0.0])
    x0 = np.array([1.0, 1.0])
    traj = smooth_flow(f, E2, x0, 2.0)
    err = max(np.linalg.norm(p - quadratic_exact(f.A, f.b, x0, t))
              for t, p in zip(traj.times, traj.points))
    assert err < 1e-8
    assert traj.details["closed_form_error"] < 1e-8


def test_smooth_flow_requires_smooth_gradient():
    with pytest.raises(DomainError):
        smooth_flow(MaxAffine([([1.0], 0.0), ([-1.0], 0.0)]), E1, [1.0], 1.0)
    with pytest.raises(DomainError):
        smooth_flow(HSD_H2, H2, X_H2, 1.0)


def test_consistency_scalar_errors():
    rep = consistency_report(QUAD1, E1, np.array([1.0]), 1.0, [16, 32, 64])
    expected = [abs((1 + 1 / n) ** -n - math.exp(-1)) for n in (16, 32, 64)]
    np.testing.assert_allclose(rep.errors, expected, rtol=1e-6)
    np.testing.assert_allclose(rep.errors, [1.13e-2, 5.7e-3, 2.9e-3], rtol=0.02)
    assert rep.monotone
    assert 0.9 <= rep.fitted_order <= 1.1


def test_consistency_at_minimizer_is_zero():
    rep = consistency_report(QUAD3, E3, QUAD3.minimizer(E3), 1.0, [16, 32, 64])
    assert max(rep.errors) <= 1e-12


def test_consistency_orders_need_three_values():
    rep = consistency_report(QUAD1, E1, np.array([1.0]), 1.0, [16, 32])
    assert rep.orders == [] and rep.fitted_order is None


# -- EVI ---------------------------------------------------------------------------

def test_evi_scalar_reduces_to_closed_form():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, n_per_unit=64, with_slopes=False)
    w = np.array([0.0])
    pairs = [(0.25, 0.5), (0.0, 1.0)]
    rep = evi_check(traj, QUAD1, E1, [w, w], pairs)
    assert rep.passed
    for t, s in pairs:
        xt = scalar_chain(1.0, 1 / 64, int(t * 64))
        xts = scalar_chain(1.0, 1 / 64, int((t + s) * 64))
        assert xts ** 2 <= xt ** 2 - 2 * s * 0.5 * xts ** 2


def test_evi_zero_step_is_equality():
    traj = mm_trajectory(HSD_H2, H2, X_H2, 1.0, n_per_unit=32, with_slopes=False)
    rep = evi_check(traj, HSD_H2, H2, [H2.lift([2.0, 2.0])], [(0.5, 0.0)])
    assert rep.passed and abs(rep.worst_violation) <= 1e-12


def test_evi_rejects_off_grid_times():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, n_per_unit=4, with_slopes=False)
    with pytest.raises(DomainError):
        evi_check(traj, QUAD1, E1, [np.array([0.0])], [(0.1, 0.5)])


def test_evi_rejects_off_space_witness():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, n_per_unit=4, with_slopes=False)
    with pytest.raises(DomainError):
        evi_check(traj, QUAD1, E1, [SpiderPoint(1, 1.0)], [(0.0, 0.5)])


@pytest.mark.parametrize("f,space,x0", [(QUAD3, E3, np.array([1.0, 2.0, -1.5])),
                                        (HSD_H2, H2, X_H2), (HSD_S3, S3, X_S3)])
def test_evi_random_triples(f, space, x0, rng):
    traj = mm_trajectory(f, space, x0, 1.0, n_per_unit=1024, with_slopes=False)
    witnesses, pairs = [], []
    for _ in range(100):
        i, j = sorted(rng.integers(0, 1025, size=2))
        witnesses.append(space.random_point(rng))
        pairs.append((i / 1024, (j - i) / 1024))
    assert evi_check(traj, f, space, witnesses, pairs).passed


# -- contraction ------------------------------------------------------------------

def test_contraction_identity_quadratic_analytic_factor():
    f = QuadraticForm(np.eye(2), [0.0, 1.0])
    rep = distance_nonincreasing_check(f, E2, np.array([1.0, 0.0]), np.array([-2.0, 3.0]),
                                       1.0, n_per_unit=64)
    assert rep.passed
    assert rep.details["analytic_factor_error"] <= 1e-9
    d = rep.details["distances"]
    assert d[-1] == pytest.approx(d[0] * (1 + 1 / 64) ** -64, rel=1e-12)


def test_contraction_equal_starts():
    rep = distance_nonincreasing_check(HSD_H2, H2, X_H2, X_H2.copy(), 1.0, n_per_unit=16)
    assert rep.passed and max(rep.details["distances"]) == 0.0


def test_contraction_spider_across_legs():
    rep = distance_nonincreasing_check(HSD_S3, S3, SpiderPoint(1, 2.0), SpiderPoint(3, 5.0),
                                       1.0, n_per_unit=64)
    assert rep.passed
    d = np.asarray(rep.details["distances"])
    assert np.all(np.diff(d) < 0)


# -- speed, dissipation, half order --------------------------------------------------

def test_speed_equals_slope_scalar_exactly():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, n_per_unit=32)
    speeds = traj.step_distances[1:] / traj.tau
    np.testing.assert_allclose(speeds, np.abs([p[0] for p in traj.points[1:]]), rtol=1e-12)
    assert speed_slope_check(traj, QUAD1, E1).passed


def test_speed_slope_stationary():
    traj = mm_trajectory(QUAD3, E3, QUAD3.minimizer(E3), 1.0, n_per_unit=32)
    rep = speed_slope_check(traj, QUAD3, E3)
    assert rep.passed and rep.details["max_abs_gap_low_slope"] <= 1e-12


@pytest.mark.parametrize("f,space,x0", [(QUAD3, E3, np.array([1.0, 2.0, -1.5])),
                                        (HSD_H2, H2, X_H2), (BUSEMANN, H2, H2.basepoint)])
def test_speed_slope(f, space, x0):
    traj = mm_trajectory(f, space, x0, 1.0, n_per_unit=256)
    assert speed_slope_check(traj, f, space).passed


def test_speed_slope_needs_every_node():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, samples=5, n_per_unit=32)
    with pytest.raises(DomainError):
        speed_slope_check(traj, QUAD1, E1)


def test_dissipation_scalar_closed_form():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 1.0, n_per_unit=256)
    rep = dissipation_check(traj, QUAD1, E1)
    assert rep.passed
    assert rep.details["energy_drop"] == pytest.approx(0.5 * (1 - math.exp(-2)), rel=0.01)


def test_dissipation_busemann_drop_equals_time():
    traj = mm_trajectory(BUSEMANN, H2, H2.basepoint, 5.0, n_per_unit=256)
    rep = dissipation_check(traj, BUSEMANN, H2)
    assert rep.details["energy_drop"] == pytest.approx(5.0, rel=0.01)
    assert rep.details["slope_integral"] == pytest.approx(5.0, rel=0.01)


def test_dissipation_stationary():
    traj = mm_trajectory(HSD_S3, S3, HUB, 1.0, n_per_unit=16)
    rep = dissipation_check(traj, HSD_S3, S3)
    assert rep.details["energy_drop"] == 0.0 == rep.details["slope_integral"]


def test_half_order_scalar():
    traj = mm_trajectory(QUAD1, E1, np.array([1.0]), 2.0, samples=65, n_per_unit=64)
    assert half_order_distance_check(traj, QUAD1, E1).passed
    for t in np.linspace(0, 2, 9):
        assert 1 - scalar_chain(1.0, 1 / 64, int(round(t * 64))) <= math.sqrt(t) + 1e-15


@pytest.mark.parametrize("f,space,x0", [(HSD_H2, H2, X_H2), (HSD_S3, S3, X_S3),
                                        (HSD_S3, S3, HUB)])
def test_half_order(f, space, x0):
    traj = mm_trajectory(f, space, x0, 2.0, samples=65, n_per_unit=256, with_slopes=False)
    assert half_order_distance_check(traj, f, space).passed


# -- long-time behaviour ------------------------------------------------------------

def test_infimum_quadratic():
    rep = infimum_realization_check(QUAD3, E3, np.array([1.0, 2.0, -1.5]), 50.0)
    assert rep.passed and rep.details["energy_gap"] < 1e-10


def test_infimum_from_minimizer():
    rep = infimum_realization_check(HSD_S3, S3, HUB, 1.0)
    assert rep.passed and rep.details["energy_gap"] == 0.0


def test_infimum_busemann_slope():
    rep = infimum_realization_check(BUSEMANN, H2, H2.basepoint, 20.0)
    assert rep.passed
    assert rep.details["final_slope"] == pytest.approx(1.0, abs=0.01)
    assert rep.details["final_value"] < -10.0


@pytest.mark.parametrize("f,space,x0", [(QUAD3, E3, None), (HSD_S3, S3, HUB),
                                        (MaxAffine([([1.0], 0.0), ([-1.0], 0.0)]), E1,
                                         np.array([0.0]))])
def test_stationarity(f, space, x0):
    x0 = f.minimizer(space) if x0 is None else x0
    assert stationarity_check(f, space, x0).passed


def test_stationarity_rejects_moving_start():
    with pytest.raises(DomainError):
        stationarity_check(QUAD1, E1, np.array([1.0]))


@pytest.mark.parametrize("f,space,x0", [(QUAD3, E3, np.array([1.0, 2.0, -1.5])),
                                        (HSD_H2, H2, X_H2), (HSD_S3, S3, X_S3),
                                        (ScaledDistance(2.0, SpiderPoint(1, 1.5)), S3, X_S3)])
def test_refinement_and_invariants(f, space, x0):
    assert refinement_check(f, space, x0, 1.0).passed
    traj = mm_trajectory(f, space, x0, 1.0, n_per_unit=64)
    assert trajectory_invariants_check(traj, f, space).passed
