"""Disk-graph connectivity and BFS on top of dynamic nearest-neighbour search.

Two sites s, t are adjacent when their disks meet: |st| <= w_s + w_t, with
all radii in [1, psi].  The plane is cut into cells of diagonal 1, so any two
sites of one cell are adjacent.  For every pair of non-empty cells that can
hold adjacent sites we keep a maximal bichromatic matching of the disk graph
between them; the cells are connected in a dynamic graph exactly when that
matching is non-empty, and site connectivity reduces to cell connectivity.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .connectivity import DynGraph
from .envelope import DuplicateIdError, NearestSiteIndex, UnknownIdError
from .geometry import Site

CELL = 1.0 / math.sqrt(2.0)
ADJ_TOL = 1e-12


class WeightOutOfRangeError(ValueError):
    pass


def adjacent(s: Site, t: Site) -> bool:
    return math.hypot(s.x - t.x, s.y - t.y) <= s.w + t.w + ADJ_TOL


def cell_of(x, y) -> tuple[int, int]:
    return math.floor(x / CELL), math.floor(y / CELL)


def neighborhood_side(psi: float) -> int:
    return math.ceil(4 * math.sqrt(2) * psi) + 3


def neighborhood(cell, psi):
    """Cells of the square block of side ceil(4*sqrt(2)*psi) + 3 around `cell`.

    For even sides the block is widened by one so it stays centred.
    """
    h = neighborhood_side(psi) // 2
    cx, cy = cell
    return [(cx + dx, cy + dy) for dx in range(-h, h + 1) for dy in range(-h, h + 1)]


class DeltaNN:
    """Nearest site under delta(p, s) = |ps| - w_s.

    The default scan handles any weights.  With backend="chan" the sites must
    share one radius, and the query goes through the plane structure, since
    subtracting a constant does not change the nearest site.
    """

    def __init__(self, backend="brute", radius=None, **kw):
        self.sites = {}
        self.backend = backend
        self.radius = radius
        self.queries = 0
        if backend == "chan":
            if radius is None:
                raise ValueError("chan backend needs a common radius")
            self.index = NearestSiteIndex("chan", **kw)
        elif backend == "brute":
            self.index = None
        else:
            raise ValueError(f"unknown backend {backend!r}")

    def __len__(self):
        return len(self.sites)

    def __contains__(self, sid):
        return sid in self.sites

    def insert(self, s: Site):
        if s.id in self.sites:
            raise DuplicateIdError(s.id)
        self.sites[s.id] = s
        if self.index is not None:
            self.index.insert(s)

    def delete(self, sid):
        if sid not in self.sites:
            raise UnknownIdError(sid)
        del self.sites[sid]
        if self.index is not None:
            self.index.delete(sid)

    def nearest(self, x, y):
        """(site, delta) minimizing delta, ties by id; None when empty."""
        self.queries += 1
        if not self.sites:
            return None
        if self.index is not None:
            sid, d = self.index.nearest(x, y)
            return self.sites[sid], d - self.radius
        best = None
        for s in self.sites.values():
            d = math.hypot(x - s.x, y - s.y) - s.w
            if best is None or (d, s.id) < best:
                best = (d, s.id)
        return self.sites[best[1]], best[0]


class CellPairMBM:
    """Maximal bichromatic matching between the sites of two cells.

    Side 0 holds the sites of the first cell, side 1 those of the second;
    unmatched sites of each side sit in a nearest-neighbour structure.
    """

    def __init__(self, backend="brute", radius=None):
        self.members = ({}, {})
        self.free = (DeltaNN(backend, radius), DeltaNN(backend, radius))
        self.mate = {}

    def __len__(self):
        return len(self.mate) // 2

    def side_of(self, sid):
        if sid in self.members[0]:
            return 0
        if sid in self.members[1]:
            return 1
        raise UnknownIdError(sid)

    def insert(self, s: Site, side: int):
        if s.id in self.members[0] or s.id in self.members[1]:
            raise DuplicateIdError(s.id)
        self.members[side][s.id] = s
        self._match_or_park(s, side)

    def _match_or_park(self, s, side):
        other = self.free[1 - side]
        hit = other.nearest(s.x, s.y)
        if hit is not None and hit[1] <= s.w + ADJ_TOL:
            t = hit[0]
            other.delete(t.id)
            self.mate[s.id] = t.id
            self.mate[t.id] = s.id
        else:
            self.free[side].insert(s)

    def delete(self, sid):
        side = self.side_of(sid)
        del self.members[side][sid]
        if sid in self.mate:
            partner = self.mate.pop(sid)
            del self.mate[partner]
            self._match_or_park(self.members[1 - side][partner], 1 - side)
        else:
            self.free[side].delete(sid)

    def edges(self):
        return [(a, b) for a, b in self.mate.items() if a in self.members[0]]

    def audit(self) -> list[str]:
        """Matching edges are disk edges and no free pair is adjacent."""
        problems = []
        for a, b in self.edges():
            if not adjacent(self.members[0][a], self.members[1][b]):
                problems.append(f"matched pair {a}-{b} is not a disk edge")
        free0 = [s for s in self.members[0].values() if s.id not in self.mate]
        free1 = [s for s in self.members[1].values() if s.id not in self.mate]
        for r in free0:
            for b in free1:
                if adjacent(r, b):
                    problems.append(f"free pair {r.id}-{b.id} is adjacent")
        return problems


class DiskConnectivity:
    """Fully dynamic connectivity of the disk graph of weighted sites."""

    def __init__(self, psi=1.0, backend="brute", seed=0):
        if psi < 1:
            raise ValueError("psi must be at least 1")
        if backend == "chan" and psi != 1:
            raise ValueError("the chan backend needs unit radii (psi = 1)")
        self.psi = float(psi)
        self.backend = backend
        self.sites = {}
        self.cell = {}
        self.cells = {}
        self.pairs = {}       # (cell, cell) sorted -> CellPairMBM
        self.partners = {}    # cell -> set of cells it shares a matching with
        self.graph = DynGraph(seed=seed)
        self.updates = 0

    def __len__(self):
        return len(self.sites)

    def _pair(self, c, d):
        key = (c, d) if c < d else (d, c)
        m = self.pairs.get(key)
        if m is None:
            m = CellPairMBM(self.backend, 1.0 if self.backend == "chan" else None)
            for side, cc in enumerate(key):
                for sid in self.cells.get(cc, ()):
                    m.insert(self.sites[sid], side)
            self.pairs[key] = m
            self.partners.setdefault(c, set()).add(d)
            self.partners.setdefault(d, set()).add(c)
        return key, m

    def _sync_edge(self, key, m):
        want = len(m) > 0
        if want != self.graph.has_edge(*key):
            if want:
                self.graph.insert_edge(*key)
            else:
                self.graph.delete_edge(*key)

    def insert_site(self, sid, x, y, w=1.0):
        if sid in self.sites:
            raise DuplicateIdError(sid)
        if not 1.0 <= w <= self.psi:
            raise WeightOutOfRangeError(f"weight {w} outside [1, {self.psi}]")
        s = Site(sid, float(x), float(y), float(w))
        c = cell_of(s.x, s.y)
        if c not in self.cells:
            self.cells[c] = set()
            self.graph.add_vertex(c)
        for d in neighborhood(c, self.psi):
            if d == c or d not in self.cells:
                continue
            key, m = self._pair(c, d)
            m.insert(s, key.index(c))
            self._sync_edge(key, m)
        self.sites[sid] = s
        self.cell[sid] = c
        self.cells[c].add(sid)
        self.updates += 1

    def delete_site(self, sid):
        if sid not in self.sites:
            raise UnknownIdError(sid)
        c = self.cell.pop(sid)
        del self.sites[sid]
        self.cells[c].discard(sid)
        for d in list(self.partners.get(c, ())):
            key = (c, d) if c < d else (d, c)
            m = self.pairs[key]
            m.delete(sid)
            self._sync_edge(key, m)
        if not self.cells[c]:
            for d in self.partners.pop(c, set()):
                key = (c, d) if c < d else (d, c)
                del self.pairs[key]
                self.partners[d].discard(c)
                if not self.partners[d]:
                    del self.partners[d]
            del self.cells[c]
            self.graph.remove_isolated_vertex(c)
        self.updates += 1

    def connected(self, a, b) -> bool:
        for sid in (a, b):
            if sid not in self.sites:
                raise UnknownIdError(sid)
        ca, cb = self.cell[a], self.cell[b]
        return ca == cb or self.graph.connected(ca, cb)

    def counters(self):
        return {"updates": self.updates, "cells": len(self.cells),
                "cell_pairs": len(self.pairs), "cell_edges": sum(1 for m in self.pairs.values() if len(m)),
                "graph_rebuilds": self.graph.rebuilds}

    def audit(self) -> list[str]:
        """Maximality of every matching, and cell-graph edges exactly where matchings are non-empty."""
        problems = []
        for key, m in self.pairs.items():
            problems += [f"{key}: {p}" for p in m.audit()]
            if (len(m) > 0) != self.graph.has_edge(*key):
                problems.append(f"{key}: cell edge out of sync with matching")
            for side, c in enumerate(key):
                if set(m.members[side]) != self.cells.get(c, set()):
                    problems.append(f"{key}: side {side} does not mirror cell {c}")
        for c, ids in self.cells.items():
            for d in neighborhood(c, self.psi):
                if d != c and d in self.cells and (min(c, d), max(c, d)) not in self.pairs:
                    problems.append(f"missing matching for cells {c}, {d}")
        problems += self.graph.check_invariants()
        return problems

    def apply(self, op):
        kind = op["op"]
        if kind == "insert_site":
            self.insert_site(op["id"], op["x"], op["y"], op.get("w", 1.0))
            return None
        if kind == "delete_site":
            self.delete_site(op["id"])
            return None
        if kind == "connected":
            return {"connected": self.connected(op["a"], op["b"])}
        raise ValueError(f"unknown op {kind!r}")


class _ArrayDeltaNN:
    """Vectorized scan for the one-shot BFS: delete-only, any weights."""

    def __init__(self, sites):
        self.ids = np.array([s.id for s in sites])
        self.x = np.array([s.x for s in sites], dtype=float)
        self.y = np.array([s.y for s in sites], dtype=float)
        self.w = np.array([s.w for s in sites], dtype=float)
        self.alive = np.ones(len(sites), dtype=bool)
        self.pos = {int(i): k for k, i in enumerate(self.ids)}
        self.queries = 0

    def delete(self, sid):
        self.alive[self.pos[sid]] = False

    def nearest(self, x, y):
        self.queries += 1
        live = np.flatnonzero(self.alive)
        if len(live) == 0:
            return None
        d = np.hypot(self.x[live] - x, self.y[live] - y) - self.w[live]
        k = live[np.argmin(d)]
        return int(self.ids[k]), float(d.min())


def bfs_tree(sites, root, backend="brute"):
    """Exact BFS tree of the disk graph from `root`: (parent map, depth map).

    Unvisited sites live in a nearest-neighbour structure under
    |ps| - w_s; each dequeued site pulls out its nearest unvisited site until
    that one is no longer adjacent.  Every site leaves the structure once, so
    there are at most 2n queries.  Unreachable sites are absent from the maps.
    """
    sites = list(sites)
    by_id = {s.id: s for s in sites}
    if root not in by_id:
        raise UnknownIdError(root)
    if backend == "chan":
        radii = {s.w for s in sites}
        if len(radii) != 1:
            raise ValueError("the chan backend needs equal radii")
        nn = DeltaNN("chan", radii.pop())
        for s in sites:
            nn.insert(s)
        query = lambda x, y: (lambda h: None if h is None else (h[0].id, h[1]))(nn.nearest(x, y))
    else:
        nn = _ArrayDeltaNN(sites)
        query = nn.nearest
    nn.delete(root)
    parent = {root: None}
    depth = {root: 0}
    queue = deque([root])
    while queue:
        p = by_id[queue.popleft()]
        while True:
            hit = query(p.x, p.y)
            if hit is None or hit[1] > p.w + ADJ_TOL:
                break
            q = hit[0]
            nn.delete(q)
            parent[q] = p.id
            depth[q] = depth[p.id] + 1
            queue.append(q)
    return parent, depth


def random_sites(rng, n, psi, side):
    """n sites uniform in a side x side square with radii uniform in [1, psi]."""
    xy = rng.random((n, 2)) * side
    w = rng.uniform(1.0, psi, size=n) if psi > 1 else np.ones(n)
    return [Site(i, float(x), float(y), float(r)) for i, ((x, y), r) in enumerate(zip(xy, w))]
