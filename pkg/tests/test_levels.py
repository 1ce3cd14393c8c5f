import json

import numpy as np
import pytest

from envelope_dnn.levels import LevelsDecomposition, audit, build_levels, build_levels_prefix


def _planes(n, seed):
    P = np.random.default_rng(seed).random((n, 2))
    return -2 * P[:, 0], -2 * P[:, 1], (P ** 2).sum(1)


def test_one_plane_single_prism():
    D = build_levels(np.array([0.1]), np.array([0.2]), np.array([0.3]), 1, rng=0)
    P = D.prisms()
    assert len(P["floor"]) == 1
    assert P["ceil"][0] == 0 and P["floor"][0] == -1 and P["level"][0] == 0


def test_three_planes_coverage():
    A, B, C = _planes(3, 1)
    D = build_levels(A, B, C, 1, rng=2)
    rep = audit(D, rng=3, n_points=1000, n_prisms=10)
    assert rep["coverage"] == 0 and rep["overlap"] == 0 and rep["level"] == 0


def test_full_prefix_has_empty_lists():
    A, B, C = _planes(40, 4)
    D = build_levels_prefix(A, B, C, 3, 40, rng=5)
    assert len(D.prisms()["idx"]) == 0


def test_prefix_one_conflicts_are_crossing_planes():
    A, B, C = _planes(30, 6)
    D = build_levels_prefix(A, B, C, 2, 1, rng=7)
    rep = audit(D, rng=8, n_points=200, n_prisms=50)
    assert rep["conflict"] == 0 and rep["coverage"] == 0


def test_random_prefix_audit():
    A, B, C = _planes(100, 9)
    D = build_levels_prefix(A, B, C, 4, 30, rng=10)
    rep = audit(D, rng=11, n_points=1000, n_prisms=100)
    assert rep == {**rep, "coverage": 0, "overlap": 0, "level": 0, "conflict": 0}


def test_plane_below_everything_raises_levels():
    A, B, C = _planes(10, 12)
    A = np.append(A, 0.0)
    B = np.append(B, 0.0)
    C = np.append(C, -100.0)
    order = np.arange(11)
    D = LevelsDecomposition(A, B, C, 3, order)
    D.run(10)
    def keyed(P):
        return {(f, c, *np.round(tr, 12)): lv
                for f, c, tr, lv in zip(P["floor"], P["ceil"], P["traps"], P["level"])}

    before = keyed(D.prisms())
    D.insert_next()
    after = keyed(D.prisms())
    # the same floor/ceiling pair now has one more plane below it
    shared = set(before) & set(after)
    assert shared
    for key in shared:
        assert after[key] == before[key] + 1


def test_every_step_keeps_coverage():
    A, B, C = _planes(60, 13)
    D = LevelsDecomposition(A, B, C, 4, np.random.default_rng(14).permutation(60))
    rng = np.random.default_rng(15)
    for _ in range(60):
        D.insert_next()
        if D.n_inserted % 10 == 0:
            rep = audit(D, rng=rng, n_points=200, n_prisms=5)
            assert rep["coverage"] == 0 and rep["overlap"] == 0


def test_counters_json_roundtrip():
    A, B, C = _planes(20, 16)
    D = build_levels(A, B, C, 2, rng=17)
    c = json.loads(D.counters_json())
    assert set(c) == {"n", "t", "seed", "prisms_created", "conflict_total", "destroyed_total",
                      "wall_time_ms"}
    assert c["prisms_created"] >= D.n_prisms()


def test_bad_order_rejected():
    A, B, C = _planes(5, 0)
    with pytest.raises(ValueError):
        LevelsDecomposition(A, B, C, 2, [0, 1, 2, 3, 3])
