"""Dynamic bichromatic closest pair over two dynamic nearest-neighbour structures.

Every point p keeps a pointer to the nearest point of the other colour as
of the moment the pointer was computed, and a heap holds all pointer pairs.
Insertions compute one pointer.  Deleting p recomputes the pointers of the
points that pointed at p.

This keeps the heap minimum exact: for the closest pair (r, b), whichever
of the two had its pointer computed last saw the other one present, so its
pointer distance is at most |rb|, and the pointer target is still alive.
Insertion costs one query; deletion costs one query per point pointing at
the deleted one, which is small on average but not bounded adversarially.
"""
from __future__ import annotations

import heapq
import math

from .envelope import DuplicateIdError, NearestSiteIndex, UnknownIdError
from .geometry import Site
from .oracles import brute_bcp

RED, BLUE = "red", "blue"


class DynamicBCP:
    """Closest red/blue pair under insertions and deletions.

    `backend` selects the nearest-neighbour structure per colour ("chan" or
    "brute").  With `weighted=True` a point carries a weight w and the pair
    distance is |rb| + w_r + w_b, answered by the brute-force backend.
    """

    def __init__(self, backend="chan", weighted=False, **kw):
        self.weighted = weighted
        self.index = {RED: NearestSiteIndex(backend, weighted, **kw),
                      BLUE: NearestSiteIndex(backend, weighted, **kw)}
        self.points = {}          # id -> (color, Site)
        self.ptr = {}             # id -> (distance, target id, version)
        self.pointed_by = {}      # id -> set of ids pointing at it
        self.heap = []
        self.version = 0
        self.nn_queries = 0
        self.updates = 0

    def __len__(self):
        return len(self.points)

    def _point(self, pid, color, x, y, w):
        return Site(pid, float(x), float(y), float(w) if self.weighted else 1.0)

    def insert(self, pid, x, y, color, w=0.0):
        if pid in self.points:
            raise DuplicateIdError(pid)
        if color not in (RED, BLUE):
            raise ValueError(f"unknown color {color!r}")
        s = self._point(pid, color, x, y, w)
        self.points[pid] = (color, s)
        self.index[color].insert(s)
        self.pointed_by[pid] = set()
        self._repoint(pid)
        self.updates += 1

    def delete(self, pid):
        if pid not in self.points:
            raise UnknownIdError(pid)
        color, _ = self.points.pop(pid)
        self.index[color].delete(pid)
        old = self.ptr.pop(pid, None)
        if old is not None:
            self.pointed_by[old[1]].discard(pid)
        for q in self.pointed_by.pop(pid):
            self._repoint(q)
        self.updates += 1

    def _other(self, color):
        return BLUE if color == RED else RED

    def _repoint(self, pid):
        color, s = self.points[pid]
        old = self.ptr.pop(pid, None)
        if old is not None and old[1] in self.pointed_by:
            self.pointed_by[old[1]].discard(pid)
        self.nn_queries += 1
        res = self.index[self._other(color)].nearest(s.x, s.y)
        if res is None:
            return
        q, d = res
        if self.weighted:
            d += s.w
        self.version += 1
        self.ptr[pid] = (d, q, self.version)
        self.pointed_by[q].add(pid)
        r, b = (pid, q) if color == RED else (q, pid)
        heapq.heappush(self.heap, (d, r, b, pid, self.version))
        if len(self.heap) > 2 * len(self.ptr) + 64:
            self.heap = [e for e in self.heap if self.ptr.get(e[3], (0, 0, -1))[2] == e[4]]
            heapq.heapify(self.heap)

    def current(self):
        """(red id, blue id, distance) of the closest pair, or None."""
        while self.heap:
            d, r, b, owner, ver = self.heap[0]
            cur = self.ptr.get(owner)
            if cur is not None and cur[2] == ver:
                return r, b, d
            heapq.heappop(self.heap)
        return None

    def counters(self):
        return {"updates": self.updates, "nn_queries": self.nn_queries,
                "heap_size": len(self.heap), "live": len(self.points)}

    def apply(self, op):
        """Trace replay: insert / delete / current_pair."""
        kind = op["op"]
        if kind == "insert":
            self.insert(op["id"], op["x"], op["y"], op["color"], op.get("w", 0.0))
            return None
        if kind == "delete":
            self.delete(op["id"])
            return None
        if kind == "current_pair":
            return _pair_answer(self.current())
        raise ValueError(f"unknown op {kind!r}")


def _pair_answer(res):
    if res is None:
        return {"pair": None}
    return {"pair": [res[0], res[1]], "distance": float(res[2])}


class BruteBCP:
    """Quadratic reference: scans all red/blue pairs."""

    def __init__(self, weighted=False):
        self.weighted = weighted
        self.red, self.blue = {}, {}
        self.weight = {}

    def apply(self, op):
        kind = op["op"]
        if kind == "insert":
            side = self.red if op["color"] == RED else self.blue
            side[op["id"]] = (op["x"], op["y"])
            self.weight[op["id"]] = op.get("w", 0.0) if self.weighted else 0.0
            return None
        if kind == "delete":
            self.red.pop(op["id"], None)
            self.blue.pop(op["id"], None)
            self.weight.pop(op["id"], None)
            return None
        if kind == "current_pair":
            if not self.weighted:
                return _pair_answer(brute_bcp(self.red, self.blue))
            best = None
            for r, (rx, ry) in self.red.items():
                for b, (bx, by) in self.blue.items():
                    d = math.hypot(rx - bx, ry - by) + self.weight[r] + self.weight[b]
                    if best is None or (d, r, b) < best:
                        best = (d, r, b)
            return _pair_answer(None if best is None else (best[1], best[2], best[0]))
        raise ValueError(f"unknown op {kind!r}")


def pair_answers_match(got, want, tol=1e-9) -> bool:
    """Same id pair and distance within tol."""
    if want["pair"] is None or got["pair"] is None:
        return want["pair"] is None and got["pair"] is None
    return got["pair"] == want["pair"] and abs(got["distance"] - want["distance"]) <= tol


def with_queries(trace):
    """Interleave a current_pair query after every update."""
    out = []
    for op in trace:
        out.append(op)
        out.append({"op": "current_pair"})
    return out
