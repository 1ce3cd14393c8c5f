"""Yao-type (1+eps)-spanners of disk graphs.

For every site t and every cone of a fixed fan translated to t, the
spanner keeps one incoming edge st from a site s with w_s >= w_t that is a
(near) shortest such disk-graph edge in that cone.

`build_spanner` finds those edges level by level on a hierarchy of grids.
Level l looks for edges with length in [R_l, 2 R_l) using cells of side
eps * R_l / 8: for each cell tau and each cone it walks the cells sigma
whose centres lie in the cone at distance about R_l from tau's centre,
nearest first, and lets the sites of sigma (smallest radius first) claim
the still-active sites of tau they can reach.  A site stops being active
for a cone once it has an edge there.  Edges shorter than the first band
are selected exactly.  `yao_reference` is the direct quadratic rule, kept
as a second route.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

CELL_FRACTION = 1.0 / 8.0
ADJ_TOL = 1e-12


def cone_count(eps: float, aperture=None) -> int:
    theta = eps / 2.0 if aperture is None else aperture
    return max(3, math.ceil(2 * math.pi / theta))


@nb.njit(cache=True)
def _cone(dx, dy, k):
    a = math.atan2(dy, dx)
    if a < 0.0:
        a += 2.0 * math.pi
    c = int(a / (2.0 * math.pi) * k)
    return min(c, k - 1)


@nb.njit(cache=True)
def _exact_short(x, y, w, k, r, active, es, et, m):
    """Exact selection among pairs shorter than r, using a grid of side r."""
    n = x.shape[0]
    gx = np.floor(x / r).astype(np.int64)
    gy = np.floor(y / r).astype(np.int64)
    key = (gx - gx.min()) * (gy.max() - gy.min() + 3) + (gy - gy.min() + 1)
    span = gy.max() - gy.min() + 3
    order = np.argsort(key)
    skey = key[order]
    for t in range(n):
        cand_s = np.empty(0, dtype=np.int64)
        cand_d = np.empty(0)
        buf_s = []
        buf_d = []
        for ddx in range(-1, 2):
            for ddy in range(-1, 2):
                kk = key[t] + ddx * span + ddy
                lo = np.searchsorted(skey, kk)
                hi = np.searchsorted(skey, kk + 1)
                for q in range(lo, hi):
                    s = order[q]
                    if s == t or w[s] < w[t]:
                        continue
                    d = math.hypot(x[s] - x[t], y[s] - y[t])
                    if d < r and d <= w[s] + w[t] + ADJ_TOL:
                        buf_s.append(s)
                        buf_d.append(d)
        if len(buf_s) == 0:
            continue
        cand_s = np.array(buf_s)
        cand_d = np.array(buf_d)
        for q in np.argsort(cand_d):
            s = cand_s[q]
            c = _cone(x[s] - x[t], y[s] - y[t], k)
            if active[t, c]:
                active[t, c] = False
                es, et = _push(es, et, m, s, t)
                m += 1
    return es, et, m


@nb.njit(cache=True)
def _push(es, et, m, s, t):
    if m >= es.shape[0]:
        ns = np.empty(2 * es.shape[0] + 16, dtype=np.int64)
        nt = np.empty(2 * es.shape[0] + 16, dtype=np.int64)
        ns[:m] = es[:m]
        nt[:m] = et[:m]
        es, et = ns, nt
    es[m] = s
    et[m] = t
    return es, et


@nb.njit(cache=True)
def _band(x, y, w, k, R, h, gx, gy, ckey, order, active, es, et, m):
    """Relaxed selection of edges with length about [R, 2R) on a grid of side h.

    `order` groups the sites by grid cell and sorts each cell by radius.
    """
    n = x.shape[0]
    sk = ckey[order]
    starts = [0]
    for i in range(1, n):
        if sk[i] != sk[i - 1]:
            starts.append(i)
    starts.append(n)
    nc = len(starts) - 1
    cst = np.array(starts)
    ccx = np.empty(nc)
    ccy = np.empty(nc)
    for c in range(nc):
        s0 = order[cst[c]]
        ccx[c] = (gx[s0] + 0.5) * h
        ccy[c] = (gy[s0] + 0.5) * h
    diam = math.sqrt(2.0) * h
    lo = R - diam
    hi = 2.0 * R + diam
    # buckets of side hi for the cell-pair search
    bx = np.floor(ccx / hi).astype(np.int64)
    by = np.floor(ccy / hi).astype(np.int64)
    bspan = by.max() + 3
    bkey = bx * bspan + (by + 1)
    border = np.argsort(bkey)
    sbkey = bkey[border]
    for tc in range(nc):
        cand = []
        dist = []
        for ddx in range(-1, 2):
            for ddy in range(-1, 2):
                kk = bkey[tc] + ddx * bspan + ddy
                a = np.searchsorted(sbkey, kk)
                b = np.searchsorted(sbkey, kk + 1)
                for q in range(a, b):
                    sc = border[q]
                    if sc == tc:
                        continue
                    d = math.hypot(ccx[sc] - ccx[tc], ccy[sc] - ccy[tc])
                    if lo <= d < hi:
                        cand.append(sc)
                        dist.append(d)
        if len(cand) == 0:
            continue
        carr = np.array(cand)
        darr = np.array(dist)
        for q in np.argsort(darr):
            sc = carr[q]
            c = _cone(ccx[sc] - ccx[tc], ccy[sc] - ccy[tc], k)
            any_active = False
            for i in range(cst[tc], cst[tc + 1]):
                if active[order[i], c]:
                    any_active = True
                    break
            if not any_active:
                continue
            for j in range(cst[sc], cst[sc + 1]):
                s = order[j]
                for i in range(cst[tc], cst[tc + 1]):
                    t = order[i]
                    if not active[t, c] or w[t] > w[s]:
                        continue
                    if math.hypot(x[s] - x[t], y[s] - y[t]) <= w[s] + w[t] + ADJ_TOL:
                        active[t, c] = False
                        es, et = _push(es, et, m, s, t)
                        m += 1
    return es, et, m


class Spanner:
    """Edge set H over site indices plus the parameters that produced it."""

    def __init__(self, ids, edges, eps, k, levels, selected):
        self.ids = ids
        self.edges = edges
        self.eps = eps
        self.k = k
        self.levels = levels
        self.selected = selected

    def __len__(self):
        return len(self.edges)

    def id_edges(self):
        return [(int(self.ids[a]), int(self.ids[b])) for a, b in self.edges]


def _arrays(sites):
    sites = list(sites)
    ids = np.array([s.id for s in sites], dtype=np.int64)
    x = np.array([s.x for s in sites], dtype=float)
    y = np.array([s.y for s in sites], dtype=float)
    w = np.array([s.w for s in sites], dtype=float)
    return ids, x, y, w


def _undirected(es, et):
    if len(es) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.sort(np.column_stack([es, et]), axis=1)
    return np.unique(e, axis=0)


def build_spanner(sites, eps, aperture=None) -> Spanner:
    """(1+eps)-spanner of the disk graph of `sites` (Euclidean edge lengths)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ids, x, y, w = _arrays(sites)
    n = len(ids)
    k = cone_count(eps, aperture)
    if n < 2:
        return Spanner(ids, np.zeros((0, 2), dtype=np.int64), eps, k, 0, 0)
    active = np.ones((n, k), dtype=np.bool_)
    es = np.empty(4 * n, dtype=np.int64)
    et = np.empty(4 * n, dtype=np.int64)
    r0 = eps / 4.0
    es, et, m = _exact_short(x, y, w, k, 2 * r0, active, es, et, 0)
    max_len = 2.0 * w.max()
    levels = 0
    R = 2 * r0
    while R <= max_len:
        h = CELL_FRACTION * eps * R
        gx = np.floor(x / h).astype(np.int64)
        gy = np.floor(y / h).astype(np.int64)
        gx -= gx.min()
        gy -= gy.min()
        ckey = gx * (gy.max() + 1) + gy
        order = np.lexsort((w, ckey))
        es, et, m = _band(x, y, w, k, R, h, gx, gy, ckey, order, active, es, et, m)
        R *= 2.0
        levels += 1
    return Spanner(ids, _undirected(es[:m], et[:m]), eps, k, levels, m)


def yao_reference(sites, eps, aperture=None) -> Spanner:
    """Direct rule: per site t and cone, the shortest edge from a site at least as large."""
    ids, x, y, w = _arrays(sites)
    n = len(ids)
    k = cone_count(eps, aperture)
    dx = x[None, :] - x[:, None]        # [t, s] -> s - t
    dy = y[None, :] - y[:, None]
    d = np.hypot(dx, dy)
    ok = (d <= w[None, :] + w[:, None] + ADJ_TOL) & (w[None, :] >= w[:, None])
    np.fill_diagonal(ok, False)
    t_idx, s_idx = np.nonzero(ok)
    ang = np.mod(np.arctan2(dy[t_idx, s_idx], dx[t_idx, s_idx]), 2 * np.pi)
    cone = np.minimum((ang / (2 * np.pi) * k).astype(np.int64), k - 1)
    order = np.lexsort((s_idx, d[t_idx, s_idx], cone, t_idx))
    t_o, c_o = t_idx[order], cone[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = (t_o[1:] != t_o[:-1]) | (c_o[1:] != c_o[:-1])
    pick = order[first]
    return Spanner(ids, _undirected(s_idx[pick], t_idx[pick]), eps, k, 0, len(pick))


def spanner_audit(sites, spanner: Spanner, rng, n_pairs=1000, n_sources=20) -> dict:
    """Subgraph check and max stretch over sampled connected pairs."""
    from .oracles import explicit_graph

    sites = list(sites)
    ids, x, y, w = _arrays(sites)
    n = len(ids)
    e = spanner.edges
    length = np.hypot(x[e[:, 0]] - x[e[:, 1]], y[e[:, 0]] - y[e[:, 1]])
    non_edges = int(np.sum(length > w[e[:, 0]] + w[e[:, 1]] + ADJ_TOL))
    if n < 2:
        return {"edges": len(e), "non_edges": non_edges, "pairs": 0, "max_stretch": 1.0}
    g, _, _ = explicit_graph(sites)
    h = coo_matrix((length, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    src = rng.choice(n, size=min(n_sources, n), replace=False)
    dg = dijkstra(g, directed=False, indices=src)
    dh = dijkstra(h, directed=False, indices=src)
    per = max(1, n_pairs // len(src))
    worst = 1.0
    pairs = 0
    disconnected = 0
    for r in range(len(src)):
        reach = np.flatnonzero(np.isfinite(dg[r]) & (dg[r] > 0))
        if len(reach) == 0:
            continue
        tgt = rng.choice(reach, size=min(per, len(reach)), replace=False)
        pairs += len(tgt)
        ratio = dh[r, tgt] / dg[r, tgt]
        disconnected += int(np.sum(~np.isfinite(ratio)))
        worst = max(worst, float(np.max(ratio)))
    return {"edges": len(e), "non_edges": non_edges, "pairs": pairs,
            "disconnected": disconnected, "max_stretch": worst}
