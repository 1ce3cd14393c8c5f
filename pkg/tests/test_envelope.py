import math

import numpy as np
import pytest

from envelope_dnn.envelope import (PRUNE_C, BruteNN, ChanEnvelope, DuplicateIdError,
                                   NearestSiteIndex, UnknownIdError, build_static)
from envelope_dnn.geometry import PlaneSurface, Site, Surface
from envelope_dnn.oracles import BruteNNOracle, nn_trace, run_differential
from envelope_dnn.trace import NNReplay, WeightedOracle, replay
from envelope_dnn.tricut import square_box


def test_two_planes_then_delete():
    env = ChanEnvelope()
    env.insert(Surface(1, PlaneSurface(0, 0, 1)))
    env.insert(Surface(2, PlaneSurface(1, 0, 0)))
    assert env.query(-2, 0) == (2, -2.0)
    env.delete(2)
    assert env.query(-2, 0) == (1, 1.0)


def test_empty_and_single():
    env = ChanEnvelope()
    assert env.query(0, 0) is None
    env.insert(Surface(0, PlaneSurface(0, 0, 3)))
    assert env.length() == 1 and env.slots[0] is not None
    env.delete(0)
    assert env.query(0.3, 0.3) is None


def test_id_discipline():
    env = ChanEnvelope()
    env.insert_site(0, 0.5, 0.5)
    with pytest.raises(DuplicateIdError):
        env.insert_site(0, 0.1, 0.1)
    with pytest.raises(UnknownIdError):
        env.delete(7)


def test_two_inserts_merge_into_location_one():
    env = ChanEnvelope(global_rebuild=False)
    env.insert_site(0, 0.2, 0.2)
    env.insert_site(1, 0.7, 0.4)
    assert env.slots[0] is None and env.slots[1] is not None
    assert env.check_invariants() == []


def test_purge_threshold():
    env = ChanEnvelope(alpha=2)
    rng = np.random.default_rng(0)
    for i, (x, y) in enumerate(rng.random((100, 2))):
        env.insert_site(i, x, y)
    for sub in env.slots:
        if sub is not None:
            assert np.allclose(sub.threshold, 0.75 * sub.orig)


def test_random_trace_matches_oracle():
    ops = nn_trace(11, 3000, warmup=500)
    r = run_differential(ops, NNReplay("chan", debug=True), BruteNNOracle())
    assert r["mismatch_count"] == 0
    assert r["counters"]["length_violations"] == 0
    assert r["counters"]["invariant1_violations"] == 0


def test_exact_mode_matches_rational_oracle():
    ops = nn_trace(12, 800)
    r = run_differential(ops, NNReplay("chan", exact=True), BruteNNOracle(exact=True))
    assert r["mismatch_count"] == 0


def test_weighted_trace_uses_cones():
    ops = nn_trace(13, 800, weighted=True, psi=3.0)
    r = run_differential(ops, NNReplay("chan", weighted=True), WeightedOracle())
    assert r["mismatch_count"] == 0


def test_global_rebuild_once_per_doubling():
    env = ChanEnvelope()
    rng = np.random.default_rng(1)
    pts = rng.random((300, 2))
    for i in range(64):
        env.insert_site(i, *pts[i])
    n_static = env.n_static
    before = env.stats["global_rebuilds"]
    i = 64
    while len(env) <= 2 * n_static:
        env.insert_site(i, *pts[i])
        i += 1
    assert env.stats["global_rebuilds"] == before + 1
    before = env.stats["global_rebuilds"]
    n_static = env.n_static
    j = 0
    while len(env) >= n_static // 2:
        env.delete(j)
        j += 1
    assert env.stats["global_rebuilds"] == before + 1


def test_rebuild_flag_does_not_change_answers():
    ops = nn_trace(14, 1500)
    a = replay(ops, "chan", global_rebuild=True)["answers"]
    b = replay(ops, "chan", global_rebuild=False)["answers"]
    assert [x["id"] for x in a] == [x["id"] for x in b]


def test_build_static_small_input_is_trivial():
    A, B, C = np.array([0.0, 1.0]), np.array([0.0, 0.5]), np.array([1.0, 0.0])
    subs = build_static(np.arange(2), A, B, C, (-1.0, -1.0, 3.0))
    assert len(subs) == 1
    assert subs[0].n_stored == 2 and subs[0].n_levels == 1


def test_build_static_membership_bound():
    rng = np.random.default_rng(2)
    P = rng.random((2048, 2))
    A, B, C = -2 * P[:, 0], -2 * P[:, 1], (P ** 2).sum(1)
    subs = build_static(np.arange(len(P)), A, B, C, square_box(P[:, 0], P[:, 1]))
    limit = PRUNE_C * math.log2(len(P))
    for sub in subs:
        assert sub.membership[sub.stored].max() <= limit
    assert subs[0].n_stored >= len(P) / 2


def test_sampled_cutting_backend_small():
    ops = nn_trace(15, 300)
    r = run_differential(ops, NNReplay("chan", cutting="sampled"), BruteNNOracle())
    assert r["mismatch_count"] == 0


def test_nearest_site_index_backends_agree():
    rng = np.random.default_rng(3)
    a, b = NearestSiteIndex("chan"), NearestSiteIndex("brute")
    for i, (x, y) in enumerate(rng.random((300, 2))):
        a.insert(Site(i, x, y))
        b.insert(Site(i, x, y))
    for x, y in rng.random((200, 2)):
        ra, rb = a.nearest(x, y), b.nearest(x, y)
        assert ra[0] == rb[0] and abs(ra[1] - rb[1]) < 1e-9


def test_brute_nn_counters():
    nn = BruteNN()
    nn.insert(Surface(0, PlaneSurface(0, 0, 0)))
    nn.query(0, 0)
    assert nn.counters()["queries"] == 1
