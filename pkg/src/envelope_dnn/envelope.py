"""Dynamic lower envelope of planes with insert, delete and vertical ray shooting.

The structure keeps a binary-counter sequence of static substructures.  Each
substructure is a ladder of shallow cuttings for levels k0, 2*k0, 4*k0, ...
built from the top down.  A plane that lands in too many conflict lists is
pruned and handed to the next substructure, so every plane is stored in few
lists.  Queries locate the finest cutting of every substructure and scan one
short conflict list.  Deletions shrink the conflict lists that contain the
plane; once a list has lost enough members, its surviving planes are
re-inserted ahead of time so no envelope plane can go missing from a scan.

Two backends implement the same dynamic nearest-neighbour contract:
`BruteNN` (any surface family, linear scans) and `ChanEnvelope` (planes).
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numba as nb
import numpy as np

from .geometry import ConeSurface, PlaneSurface, Site, Surface, lift_euclidean, lift_exact, Point2
from .tricut import CuttingError, TOL, TriangleCutting, _locate, build_triangle_cutting, square_box

K0 = 8
ALPHA = 2
PRUNE_C = 160


class DuplicateIdError(KeyError):
    pass


class UnknownIdError(KeyError):
    pass


def _plane_tuple(s):
    body = s.body if isinstance(s, Surface) else s
    return float(body.a), float(body.b), float(body.c)


class BruteNN:
    """Linear-scan dynamic nearest surface; works for planes and cones."""

    def __init__(self):
        self.surfaces = {}
        self.scanned = 0
        self.n_queries = 0

    def __len__(self):
        return len(self.surfaces)

    def insert(self, s: Surface):
        if s.id in self.surfaces:
            raise DuplicateIdError(s.id)
        self.surfaces[s.id] = s

    def delete(self, sid):
        if sid not in self.surfaces:
            raise UnknownIdError(sid)
        del self.surfaces[sid]

    def query(self, x, y):
        self.n_queries += 1
        best = None
        for sid, s in self.surfaces.items():
            body = s.body
            if isinstance(body, PlaneSurface):
                v = body.a * x + body.b * y + body.c
            else:
                v = math.hypot(x - body.site.x, y - body.site.y) + body.offset
            if best is None or v < best[1] - TOL or (abs(v - best[1]) <= TOL and sid < best[0]):
                best = (sid, v)
        self.scanned += len(self.surfaces)
        return best

    def counters(self):
        return {"queries": self.n_queries, "scanned": self.scanned, "live": len(self.surfaces)}


@nb.njit(cache=True)
def _scan_prism(x, y, trivial, x0, y0, size, starts, depth, lx, ly, diag, ptr, idx,
                A, B, C, dead, marked, tol):
    """Lowest live plane in the conflict list of the prism under (x, y).

    Returns (value, local index, near-tie count, entries scanned, prism);
    prism is -1 when the point lies outside the cutting's box.
    """
    if trivial:
        p = 0
    else:
        p = _locate(x, y, x0, y0, size, starts, depth, lx, ly, diag)
        if p < 0:
            return np.inf, -1, 0, 0, -1
    best = np.inf
    arg = -1
    near = 0
    scanned = 0
    for t in range(ptr[p], ptr[p + 1]):
        h = idx[t]
        scanned += 1
        if dead[h] or marked[h]:
            continue
        v = A[h] * x + B[h] * y + C[h]
        if v < best - tol:
            best = v
            arg = h
            near = 1
        elif v <= best + tol:
            near += 1
            if v < best:
                best = v
                arg = h
    return best, arg, near, scanned, p


@nb.njit(cache=True)
def _scan_all(x, y, stored, A, B, C, dead, marked, tol):
    best = np.inf
    arg = -1
    near = 0
    for h in range(A.shape[0]):
        if not stored[h] or dead[h] or marked[h]:
            continue
        v = A[h] * x + B[h] * y + C[h]
        if v < best - tol:
            best = v
            arg = h
            near = 1
        elif v <= best + tol:
            near += 1
            if v < best:
                best = v
                arg = h
    return best, arg, near


class Substructure:
    """One pruned ladder of shallow cuttings over an input plane set.

    Local index i refers to input plane ids[i].  `stored` marks the planes
    that survived pruning at every level; only those are answered for.
    """

    _uid = 0

    def __init__(self, ids, A, B, C, levels, stored, alpha):
        Substructure._uid += 1
        self.uid = Substructure._uid
        self.ids = ids
        self.A, self.B, self.C = A, B, C
        self.n_levels = len(levels)
        self.stored = stored
        self.n_stored = int(stored.sum())
        n = len(ids)
        self.dead = np.zeros(n, dtype=np.bool_)
        self.marked = np.zeros(n, dtype=np.bool_)
        ptrs = []
        idxs = []
        total = 0
        for cut in levels:
            ptrs.append(cut.list_ptr[:-1] + total)
            idxs.append(cut.list_idx)
            total += len(cut.list_idx)
        self.list_ptr = np.concatenate(ptrs + [np.array([total], dtype=np.int64)])
        self.list_idx = np.concatenate(idxs, dtype=np.int32, casting="same_kind")
        # only the finest cutting answers queries; let the coarser ones go now
        self.finest = levels[-1]
        del ptrs, idxs, cut
        levels.clear()
        self.orig = np.diff(self.list_ptr)
        self.live = self.orig.copy()
        self.purged = np.zeros(len(self.orig), dtype=np.bool_)
        self.threshold = (1.0 - 1.0 / (2 * alpha)) * self.orig
        owner = np.repeat(np.arange(len(self.orig), dtype=np.int32), self.orig)
        order = np.argsort(self.list_idx, kind="stable")
        self.rev_idx = owner[order]
        del owner, order
        counts = np.bincount(self.list_idx, minlength=n)
        self.rev_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.rev_ptr[1:])
        self.membership = counts

    def live_stored(self):
        return np.nonzero(self.stored & ~self.dead & ~self.marked)[0]

    def delete_local(self, i):
        """Record a real deletion; returns local indices to re-insert."""
        self.dead[i] = True
        lists = self.rev_idx[self.rev_ptr[i]:self.rev_ptr[i + 1]]
        if len(lists) == 0:
            return np.zeros(0, dtype=np.int64), 0
        self.live[lists] -= 1
        fire = lists[(self.live[lists] <= self.threshold[lists]) & ~self.purged[lists]]
        if len(fire) == 0:
            return np.zeros(0, dtype=np.int64), 0
        self.purged[fire] = True
        out = []
        for g in fire:
            members = self.list_idx[self.list_ptr[g]:self.list_ptr[g + 1]]
            keep = members[self.stored[members] & ~self.dead[members] & ~self.marked[members]]
            self.marked[keep] = True
            out.append(keep)
        return np.concatenate(out), len(fire)

    def query(self, x, y):
        cut = self.finest
        if cut.trivial:
            res = _scan_prism(x, y, True, 0.0, 0.0, 1.0, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I,
                              _EMPTY_I, cut.list_ptr, cut.list_idx, self.A, self.B, self.C,
                              self.dead, self.marked, TOL)
        elif not isinstance(cut, TriangleCutting):
            p = cut.locate(x, y)
            if p < 0:
                return np.inf, -1, 0, 0, -1
            best, arg, near, scanned, _ = _scan_prism(
                x, y, True, 0.0, 0.0, 1.0, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I,
                cut.list_ptr[p:p + 2], cut.list_idx, self.A, self.B, self.C, self.dead,
                self.marked, TOL)
            res = (best, arg, near, scanned, p)
        else:
            x0, y0, size = cut.box
            res = _scan_prism(x, y, False, x0, y0, size, cut.starts, cut.depth, cut.lx, cut.ly,
                              cut.diag, cut.list_ptr, cut.list_idx, self.A, self.B, self.C,
                              self.dead, self.marked, TOL)
        return res

    def near_candidates(self, x, y, best, prism):
        """Local indices within tolerance of `best` in the scanned list (or all)."""
        if prism >= 0:
            cand = self.finest.conflict_list(prism)
        else:
            cand = np.nonzero(self.stored)[0]
        cand = cand[~self.dead[cand] & ~self.marked[cand]]
        v = self.A[cand] * x + self.B[cand] * y + self.C[cand]
        return cand[v <= best + TOL]


_EMPTY_I = np.zeros(1, dtype=np.int64)


def build_substructure(ids, A, B, C, box, k0=K0, alpha=ALPHA, prune_limit=np.inf,
                       cutting="triangle", rng=None):
    """Ladder of cuttings over planes (ids, A, B, C); returns (substructure, pruned mask)."""
    n = len(ids)
    m = int(math.floor(math.log2(n / k0))) if n >= k0 else 0
    cum = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    levels = []
    coarse = None
    for j in range(m, -1, -1):
        k = k0 << j
        idx = np.nonzero(alive)[0]
        if cutting == "sampled":
            from .cutting import build_cutting_for_ladder
            cut = build_cutting_for_ladder(A, B, C, idx, k, box, rng)
        else:
            cut = build_triangle_cutting(A, B, C, idx, k, box, alpha=alpha, coarse=coarse)
        cum += np.bincount(cut.list_idx, minlength=n)
        newly = alive & (cum > prune_limit)
        if newly.any():
            alive &= ~newly
            cut.drop_members(newly)
        levels.append(cut)
        coarse = cut
    return Substructure(ids, A, B, C, levels, alive, alpha), ~alive


def build_static(ids, A, B, C, box, k0=K0, alpha=ALPHA, prune_c=PRUNE_C, log_n=None,
                 cutting="triangle", rng=None):
    """Hierarchy D(1), D(2), ... over the given planes.

    Each substructure is built over the planes pruned by the previous one.
    `log_n` fixes the pruning threshold prune_c * log_n (defaults to log2 of
    the input size).
    """
    ids = np.asarray(ids, dtype=np.int64)
    A, B, C = (np.ascontiguousarray(v, dtype=float) for v in (A, B, C))
    if log_n is None:
        log_n = math.log2(max(len(ids), 2))
    limit = prune_c * log_n
    out = []
    sel = np.arange(len(ids))
    while len(sel):
        sub, pruned = build_substructure(ids[sel], A[sel], B[sel], C[sel], box, k0, alpha,
                                         limit, cutting, rng)
        if sub.n_stored == 0:
            # nothing survived: store everything without pruning
            sub, pruned = build_substructure(ids[sel], A[sel], B[sel], C[sel], box, k0, alpha,
                                             np.inf, cutting, rng)
        out.append(sub)
        sel = sel[pruned]
    return out


class ChanEnvelope:
    """Fully dynamic lower envelope of non-vertical planes.

    Surfaces are inserted with unique ids.  `query(x, y)` returns
    (id, value) of the lowest live plane at (x, y), ties to the lowest id,
    or None when empty.  With `exact=True` ties and reported values use
    rational arithmetic on the exact coefficients given at insertion.
    """

    def __init__(self, k0=K0, alpha=ALPHA, prune_c=PRUNE_C, cutting="triangle",
                 global_rebuild=True, exact=False, debug=False, seed=0, box=None):
        self.k0 = k0
        self.alpha = alpha
        self.prune_c = prune_c
        self.cutting = cutting
        self.global_rebuild = global_rebuild
        self.exact = exact
        self.debug = debug
        self.rng = np.random.default_rng(seed)
        self.fixed_box = box
        self.coef = {}
        self.exact_coef = {}
        self.homes = {}
        self.slots = []
        self.n_static = 1
        self.box = box if box is not None else (-0.25, -0.25, 1.5)
        self.query_hints = []
        self.stats = dict(inserts=0, deletes=0, queries=0, reinserts=0, purges=0,
                          builds=0, built_planes=0, global_rebuilds=0, fallback_queries=0,
                          scanned=0, max_scanned=0, placement_collisions=0,
                          max_length=0, length_violations=0, invariant1_violations=0,
                          pruned=0, build_time_ms=0.0)

    # -- public contract -------------------------------------------------

    def __len__(self):
        return len(self.coef)

    def insert(self, s, exact_coef=None):
        sid = s.id
        if sid in self.coef:
            raise DuplicateIdError(sid)
        self.coef[sid] = _plane_tuple(s)
        if exact_coef is not None:
            self.exact_coef[sid] = exact_coef
        self.stats["inserts"] += 1
        self._place([sid])
        self._maybe_rebuild()
        self._after_update()

    def insert_site(self, sid, x, y):
        """Insert the lifted plane of site (x, y)."""
        plane = lift_euclidean(Point2(float(x), float(y)))
        self.insert(Surface(sid, plane), exact_coef=lift_exact(x, y) if self.exact else None)

    def delete(self, sid):
        if sid not in self.coef:
            raise UnknownIdError(sid)
        self.stats["deletes"] += 1
        queue = []
        for sub, local in self.homes.pop(sid, {}).values():
            back, fired = sub.delete_local(local)
            self.stats["purges"] += fired
            if len(back):
                queue.extend(int(g) for g in sub.ids[back])
        del self.coef[sid]
        self.exact_coef.pop(sid, None)
        for g in queue:
            if g in self.coef:
                self.stats["reinserts"] += 1
                self._place([g])
        self._maybe_rebuild()
        self._after_update()

    def query(self, x, y):
        x, y = float(x), float(y)
        self.stats["queries"] += 1
        if len(self.query_hints) < 4096:
            self.query_hints.append((x, y))
        cands = []
        scanned = 0
        fallback = False
        for sub in self.slots:
            if sub is None:
                continue
            best, arg, near, sc, prism = sub.query(x, y)
            scanned += sc
            if prism < 0:
                fallback = True
                best, arg, near = _scan_all(x, y, sub.stored, sub.A, sub.B, sub.C,
                                            sub.dead, sub.marked, TOL)
                scanned += sub.n_stored
            if arg < 0:
                continue
            cands.append((best, sub, int(arg), near, prism))
        self.stats["scanned"] += scanned
        self.stats["max_scanned"] = max(self.stats["max_scanned"], scanned)
        if fallback:
            self.stats["fallback_queries"] += 1
        if not cands:
            return None
        low = min(c[0] for c in cands)
        close = [c for c in cands if c[0] <= low + TOL]
        if len(close) == 1 and close[0][3] == 1 and not self.exact:
            _, sub, arg, _, _ = close[0]
            return int(sub.ids[arg]), float(low)
        pool = set()
        for best, sub, arg, near, prism in close:
            for h in sub.near_candidates(x, y, low, prism):
                pool.add(int(sub.ids[h]))
        return self._exact_min(pool, x, y)

    def counters(self):
        out = dict(self.stats)
        out["live"] = len(self.coef)
        out["n_static"] = self.n_static
        out["length"] = self.length()
        return out

    # -- internals -------------------------------------------------------

    def _exact_min(self, pool, x, y):
        fx, fy = Fraction(x), Fraction(y)
        best = None
        for sid in pool:
            a, b, c = self.exact_coef.get(sid) or tuple(Fraction(v) for v in self.coef[sid])
            v = a * fx + b * fy + c
            if best is None or v < best[1] or (v == best[1] and sid < best[0]):
                best = (sid, v)
        return best[0], (best[1] if self.exact else float(best[1]))

    def length(self) -> int:
        return sum(1 for s in self.slots if s is not None)

    def _bound(self) -> int:
        return int(math.floor(math.log2(self.n_static))) + 3

    def _drop(self, i):
        sub = self.slots[i]
        self.slots[i] = None
        uid = sub.uid
        for g in sub.ids.tolist():
            h = self.homes.get(g)
            if h is not None:
                h.pop(uid, None)

    def _place(self, new_ids):
        j = 0
        while j < len(self.slots) and self.slots[j] is not None:
            j += 1
        members = list(new_ids)
        seen = set(members)
        for i in range(j):
            sub = self.slots[i]
            for g in sub.ids[sub.live_stored()].tolist():
                if g not in seen:
                    seen.add(g)
                    members.append(g)
            self._drop(i)
        self._build_into(members)

    def _build_into(self, members):
        if not members:
            return
        t0 = time.perf_counter()
        ids = np.array(members, dtype=np.int64)
        co = np.array([self.coef[g] for g in members], dtype=float).reshape(-1, 3)
        log_n = math.log2(max(2 * self.n_static, 2))
        try:
            subs = build_static(ids, co[:, 0], co[:, 1], co[:, 2], self.box, self.k0,
                                self.alpha, self.prune_c, log_n, self.cutting, self.rng)
        except CuttingError:
            # degenerate corner configuration: retry with a slightly shifted box
            x0, y0, size = self.box
            self.box = (x0 - 1e-7 * size, y0 - 2e-7 * size, size * (1 + 3e-7))
            subs = build_static(ids, co[:, 0], co[:, 1], co[:, 2], self.box, self.k0,
                                self.alpha, self.prune_c, log_n, self.cutting, self.rng)
        self.stats["builds"] += 1
        self.stats["built_planes"] += len(members)
        self.stats["build_time_ms"] += (time.perf_counter() - t0) * 1000.0
        for sub in subs:
            self.stats["pruned"] += len(sub.ids) - sub.n_stored
            for local, g in enumerate(sub.ids.tolist()):
                self.homes.setdefault(g, {})[sub.uid] = (sub, local)
            size = max(sub.n_stored, 1)
            i = int(math.ceil(math.log2(size))) if size > 1 else 0
            self._assign(sub, i)

    def _assign(self, sub, i):
        while len(self.slots) <= i:
            self.slots.append(None)
        if self.slots[i] is None:
            self.slots[i] = sub
            return
        self.stats["placement_collisions"] += 1
        for t in range(i - 1, -1, -1):
            if self.slots[t] is None:
                self.slots[t] = sub
                return
        t = i + 1
        while t < len(self.slots) and self.slots[t] is not None:
            t += 1
        if t == len(self.slots):
            self.slots.append(None)
        self.slots[t] = sub

    def _maybe_rebuild(self):
        if not self.global_rebuild:
            return
        live = len(self.coef)
        if live > 2 * self.n_static or (live < self.n_static // 2 and self.n_static > 1):
            while live > 2 * self.n_static:
                self.n_static *= 2
            while self.n_static > 1 and live < self.n_static // 2:
                self.n_static //= 2
            self.rebuild_global()

    def rebuild_global(self):
        """Rebuild every substructure from the live planes."""
        self.stats["global_rebuilds"] += 1
        for i in range(len(self.slots)):
            if self.slots[i] is not None:
                self._drop(i)
        self.slots = []
        self.homes = {}
        if self.fixed_box is None:
            xs = [-a / 2 for a, _, _ in self.coef.values()]
            ys = [-b / 2 for _, b, _ in self.coef.values()]
            if self.query_hints:
                qx, qy = zip(*self.query_hints)
                xs.extend(qx)
                ys.extend(qy)
            self.box = square_box(xs, ys)
        self._build_into(sorted(self.coef))

    def _after_update(self):
        n = self.length()
        self.stats["max_length"] = max(self.stats["max_length"], n)
        if n > self._bound():
            self.stats["length_violations"] += 1
        if self.debug:
            self.check_invariants()

    def check_invariants(self):
        """Assert the storage invariants; returns a list of problems (empty if fine)."""
        problems = []
        owners = {}
        for i, sub in enumerate(self.slots):
            if sub is None:
                continue
            for g in sub.ids[sub.live_stored()].tolist():
                if g in owners:
                    problems.append(f"plane {g} stored unmarked at {owners[g]} and {i}")
                owners[g] = i
            size = sub.n_stored
            if not (size <= (1 << i) and (i == 0 or size > (1 << (i - 1)))):
                problems.append(f"location {i} holds {size} stored planes")
        missing = set(self.coef) - set(owners)
        if missing:
            problems.append(f"{len(missing)} live planes have no unmarked copy")
        extra = set(owners) - set(self.coef)
        if extra:
            problems.append(f"{len(extra)} deleted planes still answerable")
        if self.length() > self._bound():
            problems.append("sequence longer than floor(log n) + 3")
        return problems


class NearestSiteIndex:
    """Dynamic nearest site under Euclidean or additively weighted distance.

    Unweighted (or uniformly weighted) sites use the plane backend through
    the lifting map; weighted sites fall back to linear scans over cones.
    """

    def __init__(self, backend="chan", weighted=False, **kw):
        self.weighted = weighted
        self.sites = {}
        if backend == "chan" and not weighted:
            self.impl = ChanEnvelope(**kw)
        else:
            self.impl = BruteNN()

    def __len__(self):
        return len(self.sites)

    def insert(self, site: Site):
        self.sites[site.id] = site
        if isinstance(self.impl, ChanEnvelope):
            self.impl.insert_site(site.id, site.x, site.y)
        else:
            self.impl.insert(Surface(site.id, ConeSurface(Point2(site.x, site.y),
                                                          site.w if self.weighted else 0.0)))

    def delete(self, sid):
        self.impl.delete(sid)
        del self.sites[sid]

    def nearest(self, x, y):
        """(id, distance) of the nearest site, or None."""
        res = self.impl.query(x, y)
        if res is None:
            return None
        sid = res[0]
        if isinstance(self.impl, ChanEnvelope):
            s = self.sites[sid]
            return sid, math.hypot(x - s.x, y - s.y)
        return sid, float(res[1])
