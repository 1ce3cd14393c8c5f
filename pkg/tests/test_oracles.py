import math
from fractions import Fraction

import numpy as np

from envelope_dnn.geometry import PlaneSurface, Point2, Site, Surface, lift_euclidean
from envelope_dnn.oracles import (BruteNNOracle, DiskConnectivityOracle, bcp_trace, bfs_depths,
                                  brute_bcp, brute_connectivity, brute_nn, dijkstra_disk_graph,
                                  nn_trace, run_differential, with_connected_queries)


def test_brute_nn_examples():
    s = Surface(3, PlaneSurface(0, 0, 1))
    assert brute_nn([s], (0, 0))[0] == 3
    assert brute_nn([], (0, 0)) is None


def test_brute_nn_float_agrees_with_exact():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        pts = rng.random((8, 2))
        F = [Surface(i, lift_euclidean(Point2(*p))) for i, p in enumerate(pts)]
        q = tuple(rng.random(2))
        a, b = brute_nn(F, q), brute_nn(F, q, exact=True)
        assert a[0] == b[0]
        assert abs(a[1] - float(b[1])) <= 1e-9
        assert isinstance(b[1], Fraction)


def test_brute_connectivity_examples():
    assert len(set(brute_connectivity([Site(0, 0, 0, 1), Site(1, 1.5, 0, 1)]).values())) == 1
    assert len(set(brute_connectivity([Site(0, 0, 0, 1), Site(1, 10, 0, 1)]).values())) == 2


def test_brute_connectivity_permutation_stable():
    rng = np.random.default_rng(2)
    sites = [Site(i, *(rng.random(2) * 10), 1.0) for i in range(200)]
    a = brute_connectivity(sites)
    perm = [sites[i] for i in rng.permutation(len(sites))]
    assert brute_connectivity(perm) == a


def test_dijkstra_examples():
    d = dijkstra_disk_graph([Site(0, 0, 0, 1), Site(1, 1.5, 0, 1)], 0)
    assert d[1] == 1.5
    d = dijkstra_disk_graph([Site(0, 0, 0, 1), Site(1, 10, 0, 1)], 0)
    assert math.isinf(d[1])


def test_dijkstra_triangle_inequality():
    rng = np.random.default_rng(3)
    sites = [Site(i, *(rng.random(2) * 6), 1.0) for i in range(60)]
    dist = {s.id: dijkstra_disk_graph(sites, s.id) for s in sites[:10]}
    for a in range(10):
        for b in range(10):
            for c in range(60):
                if math.isfinite(dist[a][c]) and math.isfinite(dist[b][c]):
                    assert dist[a][b] <= dist[a][c] + dist[b][c] + 1e-9


def test_bfs_depths_line():
    sites = [Site(i, 2.0 * i, 0, 1) for i in range(3)] + [Site(3, 10, 0, 1)]
    assert bfs_depths(sites, 0) == {0: 0, 1: 1, 2: 2}


def test_brute_bcp():
    assert brute_bcp({0: (0, 0)}, {1: (3, 4)}) == (0, 1, 5.0)
    assert brute_bcp({0: (0, 0)}, {}) is None
    # ties go to the smallest id pair
    assert brute_bcp({5: (0, 0), 2: (2, 0)}, {7: (1, 0)})[:2] == (2, 7)


class _Echo:
    def __init__(self, fault_at=None):
        self.inner = BruteNNOracle()
        self.fault_at = fault_at
        self.n = 0

    def apply(self, op):
        out = self.inner.apply(op)
        if op["op"] == "query":
            self.n += 1
            if self.n == self.fault_at:
                out = {"id": -1, "value": out.get("value")}
        return out


def test_run_differential_empty_and_deterministic():
    r = run_differential([], _Echo(), BruteNNOracle())
    assert r["ops"] == 0 and r["mismatch_count"] == 0
    tr = nn_trace(4, 300)
    a = run_differential(tr, _Echo(), BruteNNOracle())
    b = run_differential(nn_trace(4, 300), _Echo(), BruteNNOracle())
    assert a["mismatch_count"] == b["mismatch_count"] == 0
    assert a["compared"] == b["compared"] > 0


def test_run_differential_detects_fault():
    r = run_differential(nn_trace(5, 300), _Echo(fault_at=3), BruteNNOracle())
    assert r["mismatch_count"] == 1


def test_traces_are_seeded():
    assert nn_trace(1, 200) == nn_trace(1, 200)
    assert bcp_trace(1, 200) == bcp_trace(1, 200)
    assert nn_trace(1, 200) != nn_trace(2, 200)


def test_connected_queries_only_reference_live_sites():
    from envelope_dnn.oracles import site_trace
    tr = with_connected_queries(site_trace(0, 300, 2.0, 20.0), 0)
    live = set()
    o = DiskConnectivityOracle()
    for op in tr:
        if op["op"] == "insert_site":
            live.add(op["id"])
        elif op["op"] == "delete_site":
            live.discard(op["id"])
        else:
            assert op["a"] in live and op["b"] in live and op["a"] != op["b"]
        o.apply(op)
