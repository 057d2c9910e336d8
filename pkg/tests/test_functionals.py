import math

import numpy as np
import pytest

from npcflow.functionals import (Busemann, HalfSquaredDistance, MaxAffine, QuadraticForm,
                                 ScaledDistance, chen_inequality_check, convexity_certify,
                                 functional_from_descriptor, lower_slope_estimate,
                                 slope_estimate_check, value)
from npcflow.reports import DomainError
from npcflow.spaces import HUB, Euclidean, Hyperbolic, Product, Spider, SpiderPoint

E1, E3, H2, S3 = Euclidean(1), Euclidean(3), Hyperbolic(2), Spider(3)

INSTANCES = {
    "quadratic": (QuadraticForm([[2.0, 0.5, 0.0], [0.5, 1.5, 0.2], [0.0, 0.2, 1.0]],
                                [1.0, -0.5, 0.25]), E3),
    "hsd-hyperbolic": (HalfSquaredDistance(H2.lift([0.3, -0.4])), H2),
    "hsd-spider": (HalfSquaredDistance(HUB), S3),
    "scaled-spider": (ScaledDistance(2.0, SpiderPoint(1, 1.5)), S3),
    "busemann": (Busemann([1.0, 1.0, 0.0]), H2),
    "max-affine": (MaxAffine([([1.0], 0.0), ([-1.0], 0.0)]), E1),
    "hsd-product": (HalfSquaredDistance((np.array([0.5, -0.5]), SpiderPoint(2, 1.0))),
                    Product(Euclidean(2), Spider(3))),
}


def test_value_examples():
    assert value(HalfSquaredDistance(np.array([0.0])), E1, [3.0]) == 4.5
    assert value(Busemann([1.0, 1.0, 0.0]), H2, [1.0, 0.0, 0.0]) == 0.0
    assert value(MaxAffine([([1.0], 0.0), ([-1.0], 0.0)]), E1, [2.0]) == 2.0


def test_busemann_normalizes_ideal_point():
    f = Busemann([2.0, 0.0, 2.0])
    np.testing.assert_array_equal(f.ideal, [1.0, 0.0, 1.0])


def test_busemann_value_far_along_ray_is_accurate():
    # -<x,p> ~ e^{-30} while x0 ~ e^{30}; direct evaluation cancels to garbage
    f = Busemann([1.0, 1.0, 0.0])
    x = f.ray_point(H2.basepoint, 30.0)
    assert f.value(H2, x) == pytest.approx(-30.0, abs=1e-9)


def test_busemann_rejects_timelike_ideal():
    with pytest.raises(DomainError):
        Busemann([1.0, 0.5, 0.0])


def test_quadratic_rejects_negative_eigenvalue():
    with pytest.raises(DomainError):
        QuadraticForm([[1.0, 0.0], [0.0, -1.0]])


def test_quadratic_rejects_asymmetric_matrix():
    with pytest.raises(DomainError):
        QuadraticForm([[1.0, 0.1], [0.0, 1.0]])


def test_kind_mismatch_is_domain_error():
    with pytest.raises(DomainError):
        value(Busemann([1.0, 1.0, 0.0]), E3, [0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        QuadraticForm([[1.0]]).check_space(S3)


def test_scaled_distance_needs_positive_c():
    with pytest.raises(DomainError):
        ScaledDistance(0.0, HUB)


@pytest.mark.parametrize("name", sorted(INSTANCES))
def test_convexity_certify(name):
    f, space = INSTANCES[name]
    rep = convexity_certify(f, space, trials=1000, seed=3)
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("name", sorted(INSTANCES))
def test_chen_inequality(name):
    f, space = INSTANCES[name]
    rep = chen_inequality_check(f, space, trials=500, seed=4)
    assert rep.passed, rep.summary()
    assert rep.skipped == 0


def test_chen_scalar_example():
    f = HalfSquaredDistance(np.array([0.0]))
    x, y = np.array([3.0]), np.array([0.0])
    assert f.slope(E1, x) == 3.0
    assert f.value(E1, y) >= f.value(E1, x) - 3.0 * 3.0


def test_busemann_is_one_lipschitz(rng):
    f = Busemann([1.0, 0.0, 1.0])
    for _ in range(200):
        x, y = H2.random_point(rng), H2.random_point(rng)
        assert abs(f.value(H2, x) - f.value(H2, y)) <= H2.distance(x, y) + 1e-9


# -- lower slope ----------------------------------------------------------------

def test_slope_estimate_half_squared_distance():
    a = np.array([0.0, 0.0])
    est = lower_slope_estimate(HalfSquaredDistance(a), Euclidean(2), np.array([3.0, 0.0]))
    assert est.value == pytest.approx(3.0, rel=0.01)
    assert est.converged


def test_slope_estimate_at_minimizer_is_zero():
    f = HalfSquaredDistance(HUB)
    assert lower_slope_estimate(f, S3, HUB).value == 0.0


def test_slope_estimate_scaled_distance():
    a = SpiderPoint(1, 1.5)
    est = lower_slope_estimate(ScaledDistance(2.0, a), S3, SpiderPoint(2, 0.7))
    assert est.value == pytest.approx(2.0, rel=0.01)


def test_slope_estimate_quotients_monotone_for_convex_f():
    f = HalfSquaredDistance(H2.lift([1.0, 0.0]))
    est = lower_slope_estimate(f, H2, H2.lift([-1.0, 0.5]), radii=[1e-1, 1e-2, 1e-3, 1e-4])
    q = est.quotients
    assert all(b >= a - 1e-9 for a, b in zip(q, q[1:]))


def test_slope_estimate_rejects_bad_radii():
    f = HalfSquaredDistance(np.array([0.0]))
    with pytest.raises(DomainError):
        lower_slope_estimate(f, E1, [1.0], radii=[1e-2, 1e-1])
    with pytest.raises(DomainError):
        lower_slope_estimate(f, E1, [1.0], radii=[1e-1, 0.0])


def test_max_affine_kink_slope_is_zero():
    f = MaxAffine([([1.0], 0.0), ([-1.0], 0.0)])
    assert f.slope(E1, np.array([0.0])) == 0.0
    assert lower_slope_estimate(f, E1, np.array([0.0])).value == 0.0
    assert f.slope(E1, np.array([0.5])) == 1.0


@pytest.mark.parametrize("name", ["quadratic", "hsd-hyperbolic", "hsd-spider",
                                  "scaled-spider", "busemann", "max-affine"])
def test_slope_estimates_match_exact_slopes(name):
    f, space = INSTANCES[name]
    rep = slope_estimate_check(f, space, trials=20, seed=5, rtol=0.01)
    assert rep.passed, rep.summary()


def test_quadratic_slope_is_gradient_norm(rng):
    f, space = INSTANCES["quadratic"]
    x = rng.standard_normal(3)
    assert f.slope(space, x) == pytest.approx(np.linalg.norm(f.A @ x - f.b), rel=1e-14)


# -- descriptors ----------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(INSTANCES))
def test_functional_descriptor_round_trip(name, rng):
    f, space = INSTANCES[name]
    g = functional_from_descriptor(f.descriptor(space), space)
    for _ in range(10):
        x = space.random_point(rng)
        assert g.value(space, x) == f.value(space, x)


def test_functional_descriptor_rejects_unknown_keys():
    with pytest.raises(DomainError):
        functional_from_descriptor({"kind": "quadratic", "A": [[1.0]], "b": [0.0], "c": 1}, E1)
    with pytest.raises(DomainError):
        functional_from_descriptor({"kind": "entropy"}, E1)


def test_infimum_flags():
    assert not INSTANCES["busemann"][0].is_bounded_below(H2)
    assert INSTANCES["busemann"][0].infimum(H2) == -math.inf
    f, space = INSTANCES["quadratic"]
    xs = np.linalg.solve(f.A, f.b)
    assert f.infimum(space) == pytest.approx(f.value(space, xs), abs=1e-14)
