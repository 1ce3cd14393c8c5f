import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from envelope_dnn.geometry import (EXACT, ConeSurface, PlaneSurface, Point2, Point3, Surface,
                                   eval_exact, eval_surface, level_of_point, lift_euclidean,
                                   lift_exact, triple_intersection)
from envelope_dnn.oracles import brute_level

coord = st.floats(-100, 100, allow_nan=False)


def test_eval_examples():
    assert eval_surface(PlaneSurface(0, 0, 1), Point2(5, 5)) == 1
    assert eval_surface(ConeSurface(Point2(0, 0), 0.0), Point2(3, 4)) == 5
    assert eval_surface(ConeSurface(Point2(1, 1), -2.0), Point2(1, 1)) == -2


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        PlaneSurface(math.inf, 0, 0)
    with pytest.raises(ValueError):
        Point2(math.nan, 0)
    with pytest.raises(ValueError):
        ConeSurface(Point2(0, 0), math.inf)


def test_lift_examples():
    assert lift_euclidean(Point2(0, 0)) == PlaneSurface(0, 0, 0)
    assert lift_euclidean(Point2(1, 2)) == PlaneSurface(-2, -4, 5)
    lifts = [lift_euclidean(Point2(1, 0)), lift_euclidean(Point2(0, 3))]
    vals = [eval_surface(p, Point2(0, 0)) for p in lifts]
    assert int(np.argmin(vals)) == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=20, unique=True), coord, coord)
def test_lift_preserves_nearest(sites, qx, qy):
    q = Point2(qx, qy)
    lifted = [eval_surface(lift_euclidean(Point2(*p)), q) for p in sites]
    dist2 = [(p[0] - qx) ** 2 + (p[1] - qy) ** 2 for p in sites]
    i, j = int(np.argmin(lifted)), int(np.argmin(dist2))
    # the two argmins agree up to float cancellation in the lifted form
    assert i == j or abs(dist2[i] - dist2[j]) <= 1e-9 * (1 + qx * qx + qy * qy)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=10), coord, coord)
def test_lift_exact_is_exact_distance(sites, qx, qy):
    fq = (Fraction(qx), Fraction(qy))
    for x, y in sites:
        a, b, c = lift_exact(x, y)
        v = a * fq[0] + b * fq[1] + c
        assert v == (fq[0] - Fraction(x)) ** 2 + (fq[1] - Fraction(y)) ** 2 - fq[0] ** 2 - fq[1] ** 2


def test_level_examples():
    F = [PlaneSurface(0, 0, 1)]
    assert level_of_point(Point3(0, 0, 5), F) == 1
    assert level_of_point(Point3(0, 0, 0.5), F) == 0
    assert level_of_point(Point3(0, 0, 5), []) == 0


def test_level_matches_independent_scan():
    rng = np.random.default_rng(0)
    F = [Surface(i, PlaneSurface(*rng.normal(size=3))) for i in range(50)]
    for _ in range(200):
        x, y, z = rng.normal(size=3)
        assert level_of_point(Point3(x, y, z), F) == brute_level((x, y, z), F)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(coord, coord, coord), min_size=1, max_size=15), coord, coord, coord, coord)
def test_level_monotone_in_z(planes, x, y, z, dz):
    F = [PlaneSurface(*p) for p in planes]
    lo, hi = sorted([z, z + abs(dz)])
    assert level_of_point(Point3(x, y, lo), F) <= level_of_point(Point3(x, y, hi), F)


def test_level_exact_mode():
    F = [PlaneSurface(1, 0, 0)]
    assert level_of_point(Point3(0.1, 0, 0.1), F, EXACT) == 0
    assert level_of_point(Point3(0.1, 0, 0.10000000000000002), F, EXACT) == 1


def test_triple_intersection_examples():
    z0, zx, zy = PlaneSurface(0, 0, 0), PlaneSurface(1, 0, 0), PlaneSurface(0, 1, 0)
    p = triple_intersection(z0, zx, zy)
    assert (p.x, p.y, p.z) == (0, 0, 0)
    assert triple_intersection(z0, PlaneSurface(0, 0, 1), zx) is None


def test_triple_intersection_residual():
    rng = np.random.default_rng(1)
    for _ in range(200):
        planes = [PlaneSurface(*rng.normal(size=3)) for _ in range(3)]
        p = triple_intersection(*planes)
        if p is None:
            continue
        for s in planes:
            assert abs(eval_surface(s, Point2(p.x, p.y)) - p.z) <= 1e-9 * (1 + abs(p.x) + abs(p.y) + abs(p.z))
        e = triple_intersection(*planes, policy=EXACT)
        for s in planes:
            assert eval_exact(s, Point2(float(e.x), float(e.y))) is not None
            assert Fraction(s.a) * e.x + Fraction(s.b) * e.y + Fraction(s.c) == e.z


def test_surface_family():
    assert Surface(0, PlaneSurface(0, 0, 0)).family == "plane"
    assert Surface(1, ConeSurface(Point2(0, 0), 1.0)).family == "cone"
