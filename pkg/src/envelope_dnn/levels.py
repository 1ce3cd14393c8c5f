"""Randomized incremental construction of the first t levels of a plane arrangement.

Planes are inserted in random order into a vertical decomposition of the
part of the arrangement with fewer than t planes below, restricted to an xy
box.  The decomposition is kept as regions: the projection of one cell of
the arrangement where the floor and ceiling planes stay the same.  A region
is identified by (floor, ceiling, set of planes below) and is a convex
polygon; it is cut into trapezoids by vertical lines through its vertices,
and each trapezoid carries one prism with its conflict list.

Inserting h replaces every region h crosses by at most four pieces (below
h, between floor and h, between h and ceiling, above h).  Pieces with the
same identity are merged and recomputed from their bounding planes, which
keeps the decomposition canonical.  Regions that h passes entirely under
go up one level; that is detected lazily, when the region is next touched,
by testing the planes inserted since its last refresh.
"""
from __future__ import annotations

import json
import time

import numba as nb
import numpy as np

from .tlevel import _clip, _trapezoids

TOL = 1e-9


class DegeneracyError(RuntimeError):
    pass


@nb.njit(cache=True)
def _refresh(fl, stamp, cx, cy, order, upto, A, B, C):
    """Planes inserted since each region's stamp that lie under its floor (CSR)."""
    m = fl.shape[0]
    ptr = np.zeros(m + 1, dtype=np.int64)
    buf = np.empty(16, dtype=np.int64)
    cnt = 0
    for r in range(m):
        f = fl[r]
        if f >= 0:
            x, y = cx[r], cy[r]
            zf = A[f] * x + B[f] * y + C[f]
            for s in range(stamp[r], upto):
                g = order[s]
                if A[g] * x + B[g] * y + C[g] < zf:
                    if cnt >= buf.shape[0]:
                        nb_ = np.empty(2 * buf.shape[0], dtype=np.int64)
                        nb_[:cnt] = buf[:cnt]
                        buf = nb_
                    buf[cnt] = g
                    cnt += 1
        ptr[r + 1] = cnt
    return ptr, buf[:cnt]


@nb.njit(cache=True)
def _region_polys(box, A, B, C, fl, ce, s_ptr, s_idx, c_ptr, c_idx, n):
    """Polygon of each region (floor, ceiling, below-set) clipped by its candidate planes.

    Edge labels: -1 box side, -2 the floor/ceiling crossing, else the plane
    whose constraint made the edge.
    """
    m = fl.shape[0]
    stamp = np.zeros(n, dtype=np.int64)
    cap = 8 * m + 16
    vx = np.empty(cap)
    vy = np.empty(cap)
    lab = np.empty(cap, dtype=np.int64)
    vptr = np.zeros(m + 1, dtype=np.int64)
    width = 8
    for r in range(m):
        w = c_ptr[r + 1] - c_ptr[r] + 8
        if w > width:
            width = w
    px = np.empty(width)
    py = np.empty(width)
    pl = np.empty(width, dtype=np.int64)
    qx = np.empty(width)
    qy = np.empty(width)
    ql = np.empty(width, dtype=np.int64)
    nvert = 0
    for r in range(m):
        token = r + 1
        for s in range(s_ptr[r], s_ptr[r + 1]):
            stamp[s_idx[s]] = token
        f, c = fl[r], ce[r]
        px[0], py[0], pl[0] = box[0], box[1], -1
        px[1], py[1], pl[1] = box[2], box[1], -1
        px[2], py[2], pl[2] = box[2], box[3], -1
        px[3], py[3], pl[3] = box[0], box[3], -1
        nv = 4
        if f >= 0 and c >= 0:
            nv = _clip(px, py, pl, nv, A[f] - A[c], B[f] - B[c], C[f] - C[c], -2, qx, qy, ql)
            px[:nv] = qx[:nv]
            py[:nv] = qy[:nv]
            pl[:nv] = ql[:nv]
        for s in range(c_ptr[r], c_ptr[r + 1]):
            if nv < 3:
                break
            g = c_idx[s]
            if g == f or g == c:
                continue
            if stamp[g] == token:
                a, b, cc = A[g] - A[f], B[g] - B[f], C[g] - C[f]
            elif c >= 0:
                a, b, cc = A[c] - A[g], B[c] - B[g], C[c] - C[g]
            else:
                nv = 0
                break
            inside = True
            for i in range(nv):
                if a * px[i] + b * py[i] + cc > 0.0:
                    inside = False
                    break
            if inside:
                continue
            nv = _clip(px, py, pl, nv, a, b, cc, g, qx, qy, ql)
            px[:nv] = qx[:nv]
            py[:nv] = qy[:nv]
            pl[:nv] = ql[:nv]
        if nv < 3:
            nv = 0
        else:
            area = 0.0
            for i in range(nv):
                j = i + 1 if i + 1 < nv else 0
                area += px[i] * py[j] - px[j] * py[i]
            if abs(area) < 1e-18:
                nv = 0
        if nvert + nv > vx.shape[0]:
            cap = 2 * (nvert + nv)
            nx = np.empty(cap)
            nx[:nvert] = vx[:nvert]
            vx = nx
            ny = np.empty(cap)
            ny[:nvert] = vy[:nvert]
            vy = ny
            nl = np.empty(cap, dtype=np.int64)
            nl[:nvert] = lab[:nvert]
            lab = nl
        vx[nvert:nvert + nv] = px[:nv]
        vy[nvert:nvert + nv] = py[:nv]
        lab[nvert:nvert + nv] = pl[:nv]
        nvert += nv
        vptr[r + 1] = nvert
    return vptr, vx[:nvert], vy[:nvert], lab[:nvert]


@nb.njit(cache=True)
def _crosses(g, f, c, tr, A, B, C, tol):
    """Plane g passes strictly between floor f and ceiling c over trapezoid tr."""
    above_floor = f < 0
    below_ceil = c < 0
    for q in range(4):
        x = tr[0] if q % 2 == 0 else tr[1]
        if q < 2:
            y = tr[2] if q == 0 else tr[3]
        else:
            y = tr[4] if q == 2 else tr[5]
        zg = A[g] * x + B[g] * y + C[g]
        if not above_floor and zg > A[f] * x + B[f] * y + C[f] + tol:
            above_floor = True
        if not below_ceil and zg < A[c] * x + B[c] * y + C[c] - tol:
            below_ceil = True
        if above_floor and below_ceil:
            return True
    return False


@nb.njit(cache=True)
def _prism_conflicts(traps, trap_reg, fl, ce, c_ptr, c_idx, A, B, C, tol):
    T = traps.shape[0]
    ptr = np.zeros(T + 1, dtype=np.int64)
    for pass_ in range(2):
        if pass_ == 1:
            out = np.empty(ptr[T], dtype=np.int64)
        for p in range(T):
            r = trap_reg[p]
            m = 0
            for s in range(c_ptr[r], c_ptr[r + 1]):
                g = c_idx[s]
                if _crosses(g, fl[r], ce[r], traps[p], A, B, C, tol):
                    if pass_ == 1:
                        out[ptr[p] + m] = g
                    m += 1
            if pass_ == 0:
                ptr[p + 1] = ptr[p] + m
    return ptr, out


def _csr(arrays, dtype=np.int64):
    ptr = np.zeros(len(arrays) + 1, dtype=np.int64)
    if arrays:
        np.cumsum([len(a) for a in arrays], out=ptr[1:])
        idx = np.concatenate(arrays).astype(dtype, copy=False)
    else:
        idx = np.zeros(0, dtype=dtype)
    return ptr, idx


class LevelsDecomposition:
    """Vertical decomposition of levels 0..t-1 of the inserted planes over a box.

    Use `build_levels` / `build_levels_prefix`, or create one with an order
    and call `insert_next()` step by step.
    """

    def __init__(self, A, B, C, t, order, box=(0.0, 0.0, 1.0, 1.0), seed=None):
        self.A, self.B, self.C = (np.ascontiguousarray(v, dtype=float) for v in (A, B, C))
        n = len(self.A)
        if not 1 <= t:
            raise ValueError("t must be >= 1")
        self.n, self.t = n, t
        self.order = np.asarray(order, dtype=np.int64)
        if sorted(self.order.tolist()) != list(range(n)):
            raise ValueError("order must be a permutation of the planes")
        self.box = np.array(box, dtype=float)
        self.seed = seed
        self.n_inserted = 0
        self.inserted = np.zeros(n, dtype=np.bool_)
        rng = np.random.default_rng(0)
        self._rz = [int(v) for v in rng.integers(1, 2**62, size=n)]
        self.prisms_created = 0
        self.conflict_total = 0
        self.destroyed_total = 0
        self.regions_created = 0
        self.elapsed = 0.0
        # region table
        self.fl, self.ce, self.stamp = [], [], []
        self.below, self.zkey = [], []
        self.alive = []
        self.poly = []       # (vx, vy, labels)
        self.traps = []      # T x 6 per region
        self.tlists = []     # (ptr, idx) per region, one row per trapezoid
        self.conf = []       # region conflict list (union of its prisms)
        self.cx, self.cy = [], []
        self.plane_regions = [[] for _ in range(n)]
        x0, y0, x1, y1 = self.box
        all_planes = np.arange(n, dtype=np.int64)
        traps = np.array([[x0, x1, y0, y0, y1, y1]])
        self._add_region(-1, -1, np.zeros(0, dtype=np.int64), 0,
                         (np.array([x0, x1, x1, x0]), np.array([y0, y0, y1, y1]),
                          np.full(4, -1, dtype=np.int64)),
                         traps, (np.array([0, n], dtype=np.int64), all_planes))

    # -- bookkeeping -------------------------------------------------------

    def _add_region(self, f, c, below, zkey, poly, traps, tl):
        r = len(self.fl)
        self.fl.append(f)
        self.ce.append(c)
        self.stamp.append(self.n_inserted)
        self.below.append(below)
        self.zkey.append(zkey)
        self.alive.append(True)
        self.poly.append(poly)
        self.traps.append(traps)
        self.tlists.append(tl)
        conf = np.unique(tl[1])
        self.conf.append(conf)
        self.cx.append(float(poly[0].mean()))
        self.cy.append(float(poly[1].mean()))
        for g in conf.tolist():
            self.plane_regions[g].append(r)
        self.prisms_created += len(traps)
        self.conflict_total += len(tl[1])
        self.regions_created += 1
        return r

    def _kill(self, r):
        self.alive[r] = False
        self.destroyed_total += len(self.traps[r])
        self.poly[r] = self.traps[r] = self.tlists[r] = None
        self.conf[r] = None

    def _refresh_regions(self, regs):
        if not regs:
            return
        regs = np.asarray(regs, dtype=np.int64)
        fl = np.array([self.fl[r] for r in regs], dtype=np.int64)
        st = np.array([self.stamp[r] for r in regs], dtype=np.int64)
        cx = np.array([self.cx[r] for r in regs])
        cy = np.array([self.cy[r] for r in regs])
        ptr, add = _refresh(fl, st, cx, cy, self.order, self.n_inserted, self.A, self.B, self.C)
        for j, r in enumerate(regs.tolist()):
            new = add[ptr[j]:ptr[j + 1]]
            if len(new):
                self.below[r] = np.concatenate([self.below[r], new])
                z = self.zkey[r]
                for g in new.tolist():
                    z ^= self._rz[g]
                self.zkey[r] = z
            self.stamp[r] = self.n_inserted

    def level_of_region(self, r):
        return len(self.below[r])

    def refresh_all(self):
        """Bring every live region's level up to date and drop those at level >= t."""
        live = [r for r, a in enumerate(self.alive) if a]
        self._refresh_regions(live)
        for r in live:
            if len(self.below[r]) >= self.t:
                self._kill(r)

    # -- insertion -------------------------------------------------------

    def insert_next(self):
        """Insert the next plane of the order."""
        t0 = time.perf_counter()
        h = int(self.order[self.n_inserted])
        regs = [r for r in self.plane_regions[h] if self.alive[r]]
        self.plane_regions[h] = []
        # fold earlier planes into stale levels before splitting
        self._refresh_regions(regs)
        self.inserted[h] = True
        self.n_inserted += 1
        rz = self._rz[h]
        pending = {}
        for r in regs:
            S, f, c = self.below[r], self.fl[r], self.ce[r]
            L = len(S)
            parent = (r, self.poly[r][2], self.conf[r])
            self._kill(r)
            if L >= self.t:
                continue
            zS = self.zkey[r]
            Sh = np.append(S, h)
            pieces = []
            if f >= 0:
                pieces.append((f, c, Sh, zS ^ rz, L + 1))
            pieces.append((f, h, S, zS, L))
            pieces.append((h, c, Sh, zS ^ rz, L + 1))
            if c >= 0:
                pieces.append((f, c, S, zS, L))
            for pf, pc, pS, pz, pL in pieces:
                if pL >= self.t:
                    continue
                key = (pf, pc, pz)
                ent = pending.get(key)
                if ent is None:
                    pending[key] = ent = [pf, pc, pS, pz, [], []]
                ent[4].append(parent[1])
                ent[4].append(np.array([f, c, h], dtype=np.int64))
                ent[5].append(parent[2])
        self._create(pending, h)
        self.elapsed += time.perf_counter() - t0

    def _create(self, pending, h):
        if not pending:
            return
        ents = list(pending.values())
        fl = np.array([e[0] for e in ents], dtype=np.int64)
        ce = np.array([e[1] for e in ents], dtype=np.int64)
        s_ptr, s_idx = _csr([e[2] for e in ents])
        cands = []
        for e in ents:
            c = np.concatenate(e[4])
            c = np.unique(c[c >= 0])
            cands.append(c[self.inserted[c]])
        c_ptr, c_idx = _csr(cands)
        vptr, vx, vy, lab = _region_polys(self.box, self.A, self.B, self.C, fl, ce,
                                          s_ptr, s_idx, c_ptr, c_idx, self.n)
        face, traps, _ = _trapezoids(vptr, vx, vy, 1e-12)
        confs = []
        for e in ents:
            cc = np.unique(np.concatenate(e[5]))
            confs.append(cc[~self.inserted[cc]])
        k_ptr, k_idx = _csr(confs)
        tptr, tidx = _prism_conflicts(traps, face, fl, ce, k_ptr, k_idx,
                                      self.A, self.B, self.C, TOL)
        bounds = np.searchsorted(face, np.arange(len(ents) + 1))
        for j, e in enumerate(ents):
            a, b = bounds[j], bounds[j + 1]
            if a == b:
                continue
            s, t = vptr[j], vptr[j + 1]
            lp = tptr[a:b + 1]
            self._add_region(e[0], e[1], e[2], e[3], (vx[s:t], vy[s:t], lab[s:t]), traps[a:b],
                             (lp - lp[0], tidx[lp[0]:lp[-1]]))

    def run(self, upto=None):
        upto = self.n if upto is None else upto
        while self.n_inserted < upto:
            self.insert_next()
        self.refresh_all()
        return self

    # -- views ---------------------------------------------------------------

    def prisms(self):
        """Flat view of the live prisms (after a refresh).

        Returns a dict of arrays: floor, ceil (-1 when open), level, traps
        (T x 6: x0, x1, ylo(x0), ylo(x1), yhi(x0), yhi(x1)), region, and the
        conflict lists in CSR form (ptr, idx).
        """
        self.refresh_all()
        live = [r for r, a in enumerate(self.alive) if a]
        fl, ce, lv, tr, reg, lists = [], [], [], [], [], []
        for r in live:
            T = len(self.traps[r])
            fl.append(np.full(T, self.fl[r]))
            ce.append(np.full(T, self.ce[r]))
            lv.append(np.full(T, len(self.below[r])))
            reg.append(np.full(T, r))
            tr.append(self.traps[r])
            ptr, idx = self.tlists[r]
            lists.extend(idx[ptr[i]:ptr[i + 1]] for i in range(T))
        ptr, idx = _csr(lists)
        cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
        return {"floor": cat(fl), "ceil": cat(ce), "level": cat(lv),
                "traps": np.concatenate(tr) if tr else np.zeros((0, 6)),
                "region": cat(reg), "ptr": ptr, "idx": idx}

    def n_prisms(self):
        return sum(len(self.traps[r]) for r, a in enumerate(self.alive) if a)

    def inserted_ids(self):
        return self.order[:self.n_inserted]

    def counters(self):
        return {"n": self.n, "t": self.t, "seed": self.seed,
                "prisms_created": self.prisms_created, "conflict_total": self.conflict_total,
                "destroyed_total": self.destroyed_total,
                "wall_time_ms": round(self.elapsed * 1000, 3)}

    def counters_json(self):
        return json.dumps(self.counters())

    def x_neighbors(self):
        """Pairs of prisms of one region sharing a vertical wall."""
        pairs = []
        base = 0
        for r, a in enumerate(self.alive):
            if not a:
                continue
            T = len(self.traps[r])
            pairs.extend((base + i, base + i + 1) for i in range(T - 1)
                         if self.traps[r][i, 1] == self.traps[r][i + 1, 0])
            base += T
        return pairs


def _order(n, order, rng):
    if order is not None:
        return np.asarray(order, dtype=np.int64)
    return np.random.default_rng(rng).permutation(n)


def build_levels(A, B, C, t, order=None, rng=None, box=(0.0, 0.0, 1.0, 1.0)):
    """Decomposition of levels 0..t-1 of all planes; conflict lists end up empty."""
    return build_levels_prefix(A, B, C, t, len(A), order, rng, box)


def build_levels_prefix(A, B, C, t, prefix_len, order=None, rng=None,
                        box=(0.0, 0.0, 1.0, 1.0)):
    """Decomposition for the first prefix_len planes of the order.

    Conflict lists hold the remaining planes crossing each prism.
    """
    n = len(A)
    if not 0 <= prefix_len <= n:
        raise ValueError("prefix_len out of range")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    D = LevelsDecomposition(A, B, C, t, _order(n, order, rng), box, seed)
    return D.run(prefix_len)


def audit(D: LevelsDecomposition, rng=None, n_points=1000, n_prisms=100):
    """Monte-Carlo audit of coverage, disjointness, level labels and conflict lists.

    Uses an independent crossing test (a small linear program per prism and
    plane) for conflict lists.  Returns a dict of violation counts.
    """
    from scipy.optimize import linprog

    rng = np.random.default_rng(rng)
    P = D.prisms()
    A, B, C = D.A, D.B, D.C
    ins = D.inserted_ids()
    x0, y0, x1, y1 = D.box
    tr = P["traps"]
    out = {"coverage": 0, "overlap": 0, "level": 0, "conflict": 0, "points": n_points}
    for _ in range(n_points):
        x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
        vals = np.sort(A[ins] * x + B[ins] * y + C[ins])
        hi = vals[min(D.t, len(vals) - 1)] + 0.5 if len(vals) else 1.0
        lo = vals[0] - 0.5 if len(vals) else -1.0
        z = rng.uniform(lo, hi)
        level = int((vals < z).sum())
        inside = _containing(P, A, B, C, x, y, z)
        if (level < D.t) != (len(inside) > 0):
            out["coverage"] += 1
        if len(inside) > 1:
            out["overlap"] += 1
    T = len(tr)
    pick = rng.choice(T, size=min(T, n_prisms), replace=False) if T else []
    rest = np.setdiff1d(np.arange(D.n), ins)
    for p in pick:
        f, c = P["floor"][p], P["ceil"][p]
        xa, xb, la, lb, ha, hb = tr[p]
        x = (xa + xb) / 2
        y = (la + lb + ha + hb) / 4
        zf = A[f] * x + B[f] * y + C[f] if f >= 0 else None
        zc = A[c] * x + B[c] * y + C[c] if c >= 0 else None
        z = ((zf + zc) / 2 if zf is not None and zc is not None
             else (zc - 1 if zc is not None else (zf + 1 if zf is not None else 0.0)))
        lvl = int((A[ins] * x + B[ins] * y + C[ins] < z).sum())
        if lvl != P["level"][p]:
            out["level"] += 1
        stored = set(P["idx"][P["ptr"][p]:P["ptr"][p + 1]].tolist())
        truth = {int(g) for g in rest if _lp_crosses(linprog, A, B, C, g, f, c, tr[p])}
        if stored != truth:
            out["conflict"] += 1
    out["prisms_checked"] = len(pick)
    return out


def _containing(P, A, B, C, x, y, z, eps=1e-12):
    tr = P["traps"]
    inx = (tr[:, 0] <= x) & (x <= tr[:, 1])
    idx = np.nonzero(inx)[0]
    s = (x - tr[idx, 0]) / (tr[idx, 1] - tr[idx, 0])
    lo = tr[idx, 2] + s * (tr[idx, 3] - tr[idx, 2])
    hi = tr[idx, 4] + s * (tr[idx, 5] - tr[idx, 4])
    idx = idx[(lo - eps <= y) & (y <= hi + eps)]
    f = P["floor"][idx]
    c = P["ceil"][idx]
    zf = np.where(f >= 0, A[f] * x + B[f] * y + C[f], -np.inf)
    zc = np.where(c >= 0, A[c] * x + B[c] * y + C[c], np.inf)
    return idx[(zf <= z) & (z <= zc)]


def _lp_crosses(linprog, A, B, C, g, f, c, tr):
    """max s subject to g - f >= s, c - g >= s over the trapezoid; crosses iff s > 0."""
    xa, xb, la, lb, ha, hb = tr
    rows, rhs = [], []
    # variables (x, y, s); constraints as rows . v <= rhs
    if f >= 0:
        rows.append([-(A[g] - A[f]), -(B[g] - B[f]), 1.0])
        rhs.append(C[g] - C[f])
    if c >= 0:
        rows.append([-(A[c] - A[g]), -(B[c] - B[g]), 1.0])
        rhs.append(C[c] - C[g])
    sl = (lb - la) / (xb - xa)
    sh = (hb - ha) / (xb - xa)
    rows.append([sl, -1.0, 0.0])
    rhs.append(sl * xa - la)
    rows.append([-sh, 1.0, 0.0])
    rhs.append(ha - sh * xa)
    res = linprog([0, 0, -1], A_ub=rows, b_ub=rhs,
                  bounds=[(xa, xb), (None, None), (None, 1.0)], method="highs")
    return res.status == 0 and -res.fun > 1e-7
