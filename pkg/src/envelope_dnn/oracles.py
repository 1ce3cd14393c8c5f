"""Brute-force references, seeded trace generators and a differential runner.

Nothing here calls into the structures under test or their predicates; the
distance and level computations are written out again on purpose so that
agreement between the two sides means something.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .geometry import Site

VALUE_TOL = 1e-6
NEAR_TIE = 1e-9


def _plane_value(body, x, y):
    return body.a * x + body.b * y + body.c


def _exact_plane_value(body, x, y):
    return Fraction(body.a) * Fraction(x) + Fraction(body.b) * Fraction(y) + Fraction(body.c)


def _exact_value(it, qx, qy):
    if isinstance(it, tuple):
        fx, fy, fqx, fqy = Fraction(it[1]), Fraction(it[2]), Fraction(qx), Fraction(qy)
        return (fx - fqx) ** 2 + (fy - fqy) ** 2 - fqx * fqx - fqy * fqy
    if hasattr(it.body, "a"):
        return _exact_plane_value(it.body, qx, qy)
    # cones have no rational form; the float value is the best available
    return Fraction(math.hypot(qx - it.body.site.x, qy - it.body.site.y) + it.body.offset)


def brute_nn(items, q, exact: bool = False):
    """Linear scan for the lowest surface (or nearest site) at q.

    `items` holds Surface objects or (id, x, y) tuples.  Sites are compared by
    squared distance and reported with the lifted value |q-p|^2 - |q|^2, so
    the answer can be compared against a structure over lifted planes.
    Near ties are settled with exact arithmetic, then by lowest id.
    Returns (id, value) or None.
    """
    qx, qy = float(q[0]), float(q[1])
    vals = []
    for it in items:
        if isinstance(it, tuple):
            v = (it[1] - qx) ** 2 + (it[2] - qy) ** 2 - (qx * qx + qy * qy)
            vals.append((v, it[0], it))
        else:
            body = it.body
            if hasattr(body, "a"):
                v = _plane_value(body, qx, qy)
            else:
                v = math.hypot(qx - body.site.x, qy - body.site.y) + body.offset
            vals.append((v, it.id, it))
    if not vals:
        return None
    best = min(v for v, _, _ in vals)
    near = [(sid, it) for v, sid, it in vals if v <= best + NEAR_TIE]
    if len(near) == 1 and not exact:
        return near[0][0], best
    ev, sid = min((_exact_value(it, qx, qy), sid) for sid, it in near)
    return sid, (ev if exact else float(ev))


def brute_level(q, F, exact: bool = False) -> int:
    """Count of surfaces strictly below the 3D point q = (x, y, z)."""
    x, y, z = q
    count = 0
    for s in F:
        body = s.body
        if exact:
            if _exact_plane_value(body, x, y) < Fraction(z):
                count += 1
        elif hasattr(body, "a"):
            if _plane_value(body, x, y) < z - NEAR_TIE:
                count += 1
        elif math.hypot(x - body.site.x, y - body.site.y) + body.offset < z - NEAR_TIE:
            count += 1
    return count


def disk_edges(xs, ys, ws):
    """All pairs (i, j), i < j, whose disks intersect: |p_i p_j| <= w_i + w_j."""
    xs, ys, ws = (np.asarray(v, dtype=float) for v in (xs, ys, ws))
    n = len(xs)
    rows, cols = [], []
    block = 512
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        dx = xs[lo:hi, None] - xs[None, :]
        dy = ys[lo:hi, None] - ys[None, :]
        ok = dx * dx + dy * dy <= (ws[lo:hi, None] + ws[None, :]) ** 2
        i, j = np.nonzero(ok)
        i = i + lo
        keep = i < j
        rows.append(i[keep])
        cols.append(j[keep])
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def brute_connectivity(sites) -> dict:
    """Component label per site id over the explicit disk graph."""
    sites = list(sites)
    if not sites:
        return {}
    ids = [s.id for s in sites]
    i, j = disk_edges([s.x for s in sites], [s.y for s in sites], [s.w for s in sites])
    n = len(sites)
    g = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    # relabel by first appearance in id order so labels do not depend on input order
    order = np.argsort(ids)
    remap = {}
    out = {}
    for k in order:
        lab = labels[k]
        if lab not in remap:
            remap[lab] = len(remap)
        out[ids[k]] = remap[lab]
    return out


def explicit_graph(sites):
    sites = list(sites)
    xs = np.array([s.x for s in sites])
    ys = np.array([s.y for s in sites])
    ws = np.array([s.w for s in sites])
    i, j = disk_edges(xs, ys, ws)
    length = np.hypot(xs[i] - xs[j], ys[i] - ys[j])
    n = len(sites)
    return coo_matrix((length, (i, j)), shape=(n, n)).tocsr(), i, j


def dijkstra_disk_graph(sites, src) -> dict:
    """Shortest Euclidean-length path distances from src in the disk graph."""
    sites = list(sites)
    index = {s.id: k for k, s in enumerate(sites)}
    g, _, _ = explicit_graph(sites)
    dist = dijkstra(g, directed=False, indices=index[src])
    return {s.id: float(dist[k]) for k, s in enumerate(sites)}


def bfs_depths(sites, root) -> dict:
    """Hop depths from root over the explicit disk graph; unreachable ids omitted."""
    sites = list(sites)
    index = {s.id: k for k, s in enumerate(sites)}
    g, _, _ = explicit_graph(sites)
    g = (g > 0).astype(float)
    dist = dijkstra(g, directed=False, unweighted=True, indices=index[root])
    return {s.id: int(dist[k]) for k, s in enumerate(sites) if np.isfinite(dist[k])}


def brute_bcp(red: dict, blue: dict):
    """Closest red/blue pair as (red id, blue id, distance); ties by id pair."""
    if not red or not blue:
        return None
    rid = np.array(sorted(red))
    bid = np.array(sorted(blue))
    rp = np.array([red[i] for i in rid], dtype=float)
    bp = np.array([blue[i] for i in bid], dtype=float)
    d2 = (rp[:, None, 0] - bp[None, :, 0]) ** 2 + (rp[:, None, 1] - bp[None, :, 1]) ** 2
    # row-major argmin over id-sorted axes picks the smallest (red, blue) among ties
    k = int(np.argmin(d2))
    i, j = divmod(k, len(bid))
    return int(rid[i]), int(bid[j]), math.sqrt(d2[i, j])


# ---------------------------------------------------------------- traces

def _perturb(rng, v):
    return v + rng.uniform(-1e-6, 1e-6, size=np.shape(v))


def nn_trace(seed: int, n_ops: int, p_insert=0.5, p_delete=0.2, weighted=False,
             psi: float = 1.0, warmup: int = 0):
    """Mixed insert/delete/query ops over uniform sites in the unit square.

    `warmup` leading ops are forced inserts so the live set starts large.
    """
    rng = np.random.default_rng(seed)
    ops = []
    live = []
    pos = {}
    next_id = 0
    for i in range(n_ops):
        r = rng.random()
        if i < warmup or r < p_insert or not live:
            x, y = _perturb(rng, rng.random(2))
            op = {"op": "insert", "id": next_id, "x": float(x), "y": float(y)}
            if weighted:
                op["w"] = float(rng.uniform(1.0, psi))
            pos[next_id] = len(live)
            live.append(next_id)
            next_id += 1
        elif r < p_insert + p_delete:
            k = int(rng.integers(len(live)))
            victim = live[k]
            last = live.pop()
            if last != victim:
                live[k] = last
                pos[last] = k
            del pos[victim]
            op = {"op": "delete", "id": victim}
        else:
            x, y = rng.random(2)
            op = {"op": "query", "x": float(x), "y": float(y)}
        ops.append(op)
    return ops


def edge_trace(seed: int, n_vertices: int, n_updates: int, p_insert=0.6):
    """Random edge insertions and deletions on a fixed vertex set."""
    rng = np.random.default_rng(seed)
    present = []
    where = {}
    ops = []
    while len(ops) < n_updates:
        if not present or rng.random() < p_insert:
            u, v = (int(a) for a in rng.integers(n_vertices, size=2))
            if u == v:
                continue
            e = (min(u, v), max(u, v))
            if e in where:
                continue
            where[e] = len(present)
            present.append(e)
            ops.append(("insert", e[0], e[1]))
        else:
            k = int(rng.integers(len(present)))
            e = present[k]
            last = present.pop()
            if last != e:
                present[k] = last
                where[last] = k
            del where[e]
            ops.append(("delete", e[0], e[1]))
    return ops


def site_trace(seed: int, n_updates: int, psi: float, side: float, p_insert=0.6,
               max_live: int = 2000):
    """Weighted-site insertions and deletions inside a side x side square."""
    rng = np.random.default_rng(seed)
    live = []
    pos = {}
    ops = []
    next_id = 0
    for _ in range(n_updates):
        if not live or (rng.random() < p_insert and len(live) < max_live):
            x, y = _perturb(rng, rng.random(2) * side)
            w = float(rng.uniform(1.0, psi)) if psi > 1 else 1.0
            ops.append({"op": "insert_site", "id": next_id, "x": float(x), "y": float(y), "w": w})
            pos[next_id] = len(live)
            live.append(next_id)
            next_id += 1
        else:
            k = int(rng.integers(len(live)))
            victim = live[k]
            last = live.pop()
            if last != victim:
                live[k] = last
                pos[last] = k
            del pos[victim]
            ops.append({"op": "delete_site", "id": victim})
    return ops


def bcp_trace(seed: int, n_updates: int, p_insert=0.6):
    rng = np.random.default_rng(seed)
    live = []
    pos = {}
    ops = []
    next_id = 0
    for _ in range(n_updates):
        if not live or rng.random() < p_insert:
            x, y = _perturb(rng, rng.random(2))
            color = "red" if rng.random() < 0.5 else "blue"
            ops.append({"op": "insert", "id": next_id, "x": float(x), "y": float(y), "color": color})
            pos[next_id] = len(live)
            live.append(next_id)
            next_id += 1
        else:
            k = int(rng.integers(len(live)))
            victim = live[k]
            last = live.pop()
            if last != victim:
                live[k] = last
                pos[last] = k
            del pos[victim]
            ops.append({"op": "delete", "id": victim})
    return ops


# ---------------------------------------------------------------- runner

def answers_match(got, want) -> bool:
    if got is None or want is None:
        return got is None and want is None
    if isinstance(want, dict):
        if set(got) != set(want):
            return False
        return all(answers_match(got[k], want[k]) for k in want)
    if isinstance(want, (list, tuple)):
        if len(got) != len(want):
            return False
        return all(answers_match(g, w) for g, w in zip(got, want))
    if isinstance(want, Fraction) or isinstance(got, Fraction):
        return Fraction(got) == Fraction(want)
    if isinstance(want, float) or isinstance(got, float):
        return abs(float(got) - float(want)) <= VALUE_TOL
    return got == want


def run_differential(trace, structure, oracle, compare=answers_match) -> dict:
    """Replay `trace` on both sides; every op goes to `apply(op)`.

    Ops whose oracle answer is not None are compared.  The report lists the
    first mismatches and the structure's counters when it exposes any.
    """
    mismatches = []
    mismatch_count = 0
    compared = 0
    t0 = time.perf_counter()
    for i, op in enumerate(trace):
        got = structure.apply(op)
        want = oracle.apply(op)
        if want is None and got is None:
            continue
        compared += 1
        if not compare(got, want):
            mismatch_count += 1
            if len(mismatches) < 20:
                mismatches.append({"index": i, "op": op, "got": got, "want": want})
    counters = structure.counters() if hasattr(structure, "counters") else {}
    return {
        "ops": len(trace),
        "compared": compared,
        "mismatch_count": mismatch_count,
        "mismatches": mismatches,
        "counters": counters,
        "wall_time_ms": (time.perf_counter() - t0) * 1000.0,
    }


class BruteNNOracle:
    """Reference side of a nearest-neighbour trace replay."""

    def __init__(self, exact: bool = False):
        self.sites = {}
        self.exact = exact

    def apply(self, op):
        kind = op["op"]
        if kind == "insert":
            self.sites[op["id"]] = (op["id"], op["x"], op["y"])
        elif kind == "delete":
            del self.sites[op["id"]]
        elif kind == "query":
            ans = brute_nn(list(self.sites.values()), (op["x"], op["y"]), exact=self.exact)
            if ans is None:
                return {"id": None}
            return {"id": ans[0], "value": ans[1]}
        return None


def with_connected_queries(trace, seed: int, per_update: int = 2):
    """Append `per_update` random connected(a, b) queries after every site update."""
    rng = np.random.default_rng(seed)
    live = []
    pos = {}
    out = []
    for op in trace:
        out.append(op)
        if op["op"] == "insert_site":
            pos[op["id"]] = len(live)
            live.append(op["id"])
        elif op["op"] == "delete_site":
            k = pos.pop(op["id"])
            last = live.pop()
            if last != op["id"]:
                live[k] = last
                pos[last] = k
        if len(live) >= 2:
            for _ in range(per_update):
                a, b = rng.choice(len(live), size=2, replace=False)
                out.append({"op": "connected", "a": live[a], "b": live[b]})
    return out


class DiskConnectivityOracle:
    """Recomputes components of the explicit disk graph after each update."""

    def __init__(self):
        self.sites = {}
        self.labels = None

    def apply(self, op):
        kind = op["op"]
        if kind == "insert_site":
            self.sites[op["id"]] = Site(op["id"], op["x"], op["y"], op.get("w", 1.0))
            self.labels = None
        elif kind == "delete_site":
            del self.sites[op["id"]]
            self.labels = None
        elif kind == "connected":
            if self.labels is None:
                self.labels = brute_connectivity(self.sites.values())
            return {"connected": self.labels[op["a"]] == self.labels[op["b"]]}
        else:
            raise ValueError(f"unknown op {kind!r}")
        return None
