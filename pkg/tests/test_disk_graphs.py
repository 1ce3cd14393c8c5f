import math

import numpy as np
import pytest

from envelope_dnn.disk_graphs import (CELL, CellPairMBM, DiskConnectivity, WeightOutOfRangeError,
                                      bfs_tree, cell_of, neighborhood, neighborhood_side,
                                      random_sites)
from envelope_dnn.geometry import Site
from envelope_dnn.oracles import (DiskConnectivityOracle, bfs_depths, disk_edges, run_differential,
                                  site_trace, with_connected_queries)


def test_neighborhood_sizes():
    assert neighborhood_side(1) == 9 and len(neighborhood((0, 0), 1)) == 81
    assert neighborhood_side(2) == 15 and len(neighborhood((0, 0), 2)) == 225


@pytest.mark.parametrize("psi", [1.0, 2.0, 4.0])
def test_edges_stay_within_neighborhoods(psi):
    rng = np.random.default_rng(int(psi))
    sites = random_sites(rng, 400, psi, 15 * psi)
    i, j = disk_edges([s.x for s in sites], [s.y for s in sites], [s.w for s in sites])
    for a, b in zip(i, j):
        ca, cb = cell_of(sites[a].x, sites[a].y), cell_of(sites[b].x, sites[b].y)
        assert cb in set(neighborhood(ca, psi))


def test_cell_is_a_clique():
    assert math.isclose(CELL * math.sqrt(2), 1.0)


def test_mbm_examples():
    m = CellPairMBM()
    m.insert(Site(0, 0, 0, 1), 0)
    m.insert(Site(1, 1.5, 0, 1), 1)
    assert len(m) == 1
    m.insert(Site(2, 5, 0, 1), 1)
    assert 2 not in m.mate and m.audit() == []


def test_mbm_maximal_under_random_updates():
    rng = np.random.default_rng(0)
    m = CellPairMBM()
    live = {}
    for step in range(600):
        if live and rng.random() < 0.4:
            sid = int(rng.choice(list(live)))
            m.delete(sid)
            del live[sid]
        else:
            side = int(rng.integers(2))
            x, y = rng.random(2) * 0.7 + (side * 2.0, 0)
            m.insert(Site(step, x, y, float(rng.uniform(1, 1.2))), side)
            live[step] = side
        assert m.audit() == []


def test_connectivity_examples():
    d = DiskConnectivity(psi=5)
    d.insert_site(0, 0.1, 0.1)
    d.insert_site(1, 0.2, 0.2)
    assert d.connected(0, 1)
    d.insert_site(2, 10, 0.1)
    assert not d.connected(0, 2)
    d.insert_site(3, 5, 0.1, 4.1)
    assert d.connected(0, 2)
    with pytest.raises(WeightOutOfRangeError):
        d.insert_site(4, 0, 0, 6)


@pytest.mark.parametrize("psi,side", [(1.0, 18.0), (2.0, 28.0)])
def test_connectivity_trace(psi, side):
    tr = with_connected_queries(site_trace(5, 300, psi, side), 5)
    d = DiskConnectivity(psi)
    r = run_differential(tr, d, DiskConnectivityOracle())
    assert r["mismatch_count"] == 0
    assert d.audit() == []


def test_connectivity_chan_backend():
    tr = with_connected_queries(site_trace(6, 200, 1.0, 15.0), 6)
    r = run_differential(tr, DiskConnectivity(1.0, backend="chan"), DiskConnectivityOracle())
    assert r["mismatch_count"] == 0


def test_bfs_examples():
    sites = [Site(i, 2.0 * i, 0, 1) for i in range(3)] + [Site(3, 10, 0, 1)]
    parent, depth = bfs_tree(sites, 0)
    assert depth == {0: 0, 1: 1, 2: 2}
    assert parent == {0: None, 1: 0, 2: 1}


@pytest.mark.parametrize("backend", ["brute", "chan"])
def test_bfs_random(backend):
    rng = np.random.default_rng(7)
    sites = random_sites(rng, 500, 1.0, 20.0)
    assert bfs_tree(sites, 3, backend)[1] == bfs_depths(sites, 3)


def test_bfs_parents_are_adjacent():
    rng = np.random.default_rng(8)
    sites = random_sites(rng, 300, 3.0, 25.0)
    by = {s.id: s for s in sites}
    parent, depth = bfs_tree(sites, 0)
    for v, p in parent.items():
        if p is not None:
            a, b = by[v], by[p]
            assert math.hypot(a.x - b.x, a.y - b.y) <= a.w + b.w + 1e-12
            assert depth[v] == depth[p] + 1
