import math

import numpy as np
import pytest

from npcflow.reports import DomainError
from npcflow.spaces import (HUB, Euclidean, Hyperbolic, Product, Spider, SpiderPoint,
                            comparison_gap, distance, geodesic_point, npc_certify,
                            space_from_descriptor)

from conftest import MODEL_SPACES


# -- distance examples ---------------------------------------------------------

def test_euclidean_distance_pythagoras():
    assert distance(Euclidean(2), [0, 0], [3, 4]) == 5.0


def test_spider_distance_through_hub():
    S = Spider(3)
    assert distance(S, (1, 2.0), (2, 3.0)) == 5.0
    assert distance(S, (1, 2.0), (1, 3.0)) == 1.0


def test_hyperbolic_unit_geodesic_distance():
    H = Hyperbolic(2)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([math.cosh(1.0), math.sinh(1.0), 0.0])
    assert distance(H, x, y) == pytest.approx(1.0, abs=1e-14)


def test_hyperbolic_distance_close_points_keeps_precision():
    # arccosh(-<x,y>) would lose half the digits here
    H = Hyperbolic(2)
    x = H.lift([0.3, -0.2])
    y = H.chart_exp(x, np.array([1e-9, 0.0]))
    assert distance(H, x, y) == pytest.approx(1e-9, rel=1e-6)


def test_product_distance_is_l2_combination():
    P = Product(Euclidean(2), Spider(3))
    x = (np.array([0.0, 0.0]), SpiderPoint(1, 1.0))
    y = (np.array([3.0, 0.0]), SpiderPoint(2, 3.0))
    assert P.distance(x, y) == pytest.approx(5.0)


def test_mismatched_point_kind_is_domain_error():
    with pytest.raises(DomainError):
        distance(Euclidean(2), (1, 2.0), [0.0, 0.0])
    with pytest.raises(DomainError):
        distance(Spider(3), np.array([1.0, 2.0, 3.0]), (1, 1.0))


# -- geodesics -----------------------------------------------------------------

def test_euclidean_midpoint():
    np.testing.assert_array_equal(geodesic_point(Euclidean(2), [0, 0], [2, 0], 0.5), [1.0, 0.0])


def test_spider_symmetric_crossing_hits_hub():
    assert geodesic_point(Spider(3), (1, 2.0), (2, 2.0), 0.5) == HUB


def test_hyperbolic_midpoint_of_length_two_segment():
    H = Hyperbolic(2)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([math.cosh(2.0), math.sinh(2.0), 0.0])
    m = geodesic_point(H, x, y, 0.5)
    np.testing.assert_allclose(m, [math.cosh(1.0), math.sinh(1.0), 0.0], atol=1e-13)
    assert H.distance(x, m) == pytest.approx(1.0, abs=1e-13)


def test_geodesic_parameter_outside_unit_interval_rejected():
    with pytest.raises(DomainError):
        geodesic_point(Euclidean(1), [0.0], [1.0], 1.5)


def test_degenerate_hyperbolic_geodesic_returns_start():
    H = Hyperbolic(2)
    x = H.lift([0.5, 0.5])
    np.testing.assert_array_equal(H.geodesic(x, x.copy(), 0.3), x)


@pytest.mark.parametrize("name", sorted(MODEL_SPACES))
def test_geodesic_affine_reparametrization(name, rng):
    space = MODEL_SPACES[name]()
    worst = 0.0
    for _ in range(200):
        x, y = space.random_point(rng), space.random_point(rng)
        s, t = rng.uniform(size=2)
        L = space.distance(x, y)
        gs, gt = space.geodesic(x, y, s), space.geodesic(x, y, t)
        worst = max(worst, abs(space.distance(gs, gt) - abs(t - s) * L))
        assert space.distance(space.geodesic(x, y, 0.0), x) == 0.0
        assert space.distance(space.geodesic(x, y, 1.0), y) == 0.0
    assert worst <= 1e-10 * space.box_radius


@pytest.mark.parametrize("name", sorted(MODEL_SPACES))
def test_metric_axioms(name, rng):
    space = MODEL_SPACES[name]()
    for _ in range(200):
        x, y, z = (space.random_point(rng) for _ in range(3))
        dxy = space.distance(x, y)
        assert dxy >= 0
        assert space.distance(x, x) <= 1e-12
        assert abs(dxy - space.distance(y, x)) <= 1e-10
        assert dxy <= space.distance(x, z) + space.distance(z, y) + 1e-10


def test_hyperboloid_invariant_after_geodesic(rng):
    H = Hyperbolic(3)
    for _ in range(100):
        g = H.geodesic(H.random_point(rng), H.random_point(rng), rng.uniform())
        q = -g[0] ** 2 + np.dot(g[1:], g[1:])
        assert abs(q + 1.0) <= 1e-12 * g[0] ** 2 and g[0] > 0


def test_product_geodesic_is_factorwise(rng):
    E, S = Euclidean(2), Spider(3)
    P = Product(E, S)
    x, y = P.random_point(rng), P.random_point(rng)
    g = P.geodesic(x, y, 0.3)
    np.testing.assert_array_equal(g[0], E.geodesic(x[0], y[0], 0.3))
    assert g[1] == S.geodesic(x[1], y[1], 0.3)


# -- canonicalization and descriptors -------------------------------------------

def test_spider_hub_canonical():
    S = Spider(3)
    assert S.validate((2, 0.0)) == HUB
    assert S.validate([3, 0]) == HUB


@pytest.mark.parametrize("bad", [(4, 1.0), (0, 1.0), (1, -1.0), (1, float("nan"))])
def test_spider_rejects_invalid_points(bad):
    with pytest.raises(DomainError):
        Spider(3).validate(bad)


def test_hyperbolic_rejects_off_sheet_point():
    with pytest.raises(DomainError):
        Hyperbolic(2).validate([1.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        Hyperbolic(2).validate([-1.0, 0.0, 0.0])


@pytest.mark.parametrize("name", sorted(MODEL_SPACES))
def test_descriptor_round_trip(name):
    space = MODEL_SPACES[name]()
    assert space_from_descriptor(space.descriptor()) == space


def test_descriptor_rejects_unknown_keys():
    with pytest.raises(DomainError):
        space_from_descriptor({"kind": "euclidean", "dim": 2, "colour": "red"})
    with pytest.raises(DomainError):
        space_from_descriptor({"kind": "sphere", "dim": 2})


# -- comparison inequality ------------------------------------------------------

def test_comparison_gap_is_zero_in_flat_space():
    E = Euclidean(3)
    x, y, z = np.array([1.0, 0, 0]), np.array([0, 2.0, 0]), np.array([0, 0, 3.0])
    assert abs(comparison_gap(E, x, y, z, 0.37)) <= 1e-13


def test_comparison_gap_strict_on_spider_across_hub():
    # z on a third leg sees the geodesic bend at the hub
    S = Spider(3)
    gap = comparison_gap(S, SpiderPoint(1, 1.0), SpiderPoint(2, 1.0), SpiderPoint(3, 1.0), 0.5)
    # d(z, hub)^2 = 1 against 0.5*4 + 0.5*4 - 0.25*4 = 3
    assert gap == pytest.approx(-2.0, abs=1e-14)


@pytest.mark.parametrize("name", sorted(MODEL_SPACES))
def test_npc_certify_passes(name):
    rep = npc_certify(MODEL_SPACES[name](), trials=1000, seed=1)
    assert rep.passed and rep.trials == 1000
    if name.startswith("euclidean"):
        assert rep.worst_violation <= 1e-12


def test_hyperbolic_comparison_strict_on_generic_triples(rng):
    H = Hyperbolic(2)
    gaps = [comparison_gap(H, H.random_point(rng), H.random_point(rng), H.random_point(rng),
                           rng.uniform(0.1, 0.9)) for _ in range(200)]
    assert np.median(gaps) < -1e-3


def test_npc_certify_rejects_zero_trials():
    with pytest.raises(DomainError):
        npc_certify(Euclidean(1), trials=0)
