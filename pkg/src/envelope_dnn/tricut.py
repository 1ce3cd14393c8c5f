"""Certified vertical shallow cuttings of plane arrangements over a square box.

The box is refined as a quadtree.  Every square is split into two triangles
along one of its diagonals.  Each triangle corner is lifted to a height
between the s-th and (s+1)-th lowest plane at that corner, and the prism
below the lifted triangle is kept when

* at least k+1 planes pass strictly below all three lifted corners, so the
  whole ceiling lies above level k (planes are linear over the triangle), and
* at most alpha*k planes pass below any lifted corner, which is exactly the
  set of planes crossing the prism.

Squares where neither diagonal works are split in four.  Both properties
are checked exactly (up to the float tolerance), not sampled.

Corner levels are read from a candidate set: by default every plane, or,
when a coarser cutting is supplied, the conflict list of the coarse prism
over the corner.  The candidates are provably complete when the highest
value needed lies below the coarse ceiling; otherwise the corner is
re-evaluated against every plane.
"""
from __future__ import annotations

import numba as nb
import numpy as np

MAX_DEPTH = 30
TOL = 1e-9


class CuttingError(RuntimeError):
    pass


@nb.njit(cache=True)
def _spread(v):
    v = v & 0x3FFFFFFF
    v = (v | (v << 16)) & 0x0000FFFF0000FFFF
    v = (v | (v << 8)) & 0x00FF00FF00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0F
    v = (v | (v << 2)) & 0x3333333333333333
    v = (v | (v << 1)) & 0x5555555555555555
    return v


@nb.njit(cache=True)
def _morton(ix, iy):
    return _spread(ix) | (_spread(iy) << 1)


@nb.njit(cache=True)
def _leaf_starts(lx, ly, depth):
    out = np.empty(lx.shape[0], dtype=np.int64)
    for i in range(lx.shape[0]):
        sh = MAX_DEPTH - depth[i]
        out[i] = _morton(lx[i] << sh, ly[i] << sh)
    return out


@nb.njit(cache=True)
def ragged_take(ptr, idx, rows):
    """Concatenate CSR rows `rows` of (ptr, idx); returns (new_ptr, new_idx)."""
    new_ptr = np.zeros(rows.shape[0] + 1, dtype=np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        new_ptr[i + 1] = new_ptr[i] + ptr[r + 1] - ptr[r]
    out = np.empty(new_ptr[-1], dtype=idx.dtype)
    for i in range(rows.shape[0]):
        r = rows[i]
        out[new_ptr[i]:new_ptr[i + 1]] = idx[ptr[r]:ptr[r + 1]]
    return new_ptr, out


@nb.njit(cache=True)
def _locate(x, y, x0, y0, size, starts, depth, lx, ly, diag):
    """Prism index (2*leaf + triangle) under (x, y), or -1 outside the box."""
    u = (x - x0) / size
    v = (y - y0) / size
    if not (u >= 0.0 and u <= 1.0 and v >= 0.0 and v <= 1.0):
        return -1
    full = 1 << MAX_DEPTH
    ix = int(u * full)
    iy = int(v * full)
    if ix >= full:
        ix = full - 1
    if iy >= full:
        iy = full - 1
    code = _morton(ix, iy)
    leaf = np.searchsorted(starts, code, side="right") - 1
    d = depth[leaf]
    cell = 1 << d
    su = u * cell - lx[leaf]
    sv = v * cell - ly[leaf]
    if diag[leaf] == 0:
        tri = 0 if sv <= su else 1
    else:
        tri = 0 if su + sv <= 1.0 else 1
    return 2 * leaf + tri


@nb.njit(cache=True)
def _locate_many(xs, ys, x0, y0, size, starts, depth, lx, ly, diag):
    out = np.empty(xs.shape[0], dtype=np.int64)
    for i in range(xs.shape[0]):
        out[i] = _locate(xs[i], ys[i], x0, y0, size, starts, depth, lx, ly, diag)
    return out


@nb.njit(cache=True)
def _lowest(vals, Q, outv, outp):
    """Positions of the Q smallest entries of vals, in ascending order."""
    if Q > 48:
        order = np.argsort(vals, kind="mergesort")
        for r in range(Q):
            outv[r] = vals[order[r]]
            outp[r] = order[r]
        return
    cnt = 0
    for t in range(vals.shape[0]):
        v = vals[t]
        if cnt == Q and v >= outv[Q - 1]:
            continue
        j = cnt if cnt < Q else Q - 1
        while j > 0 and outv[j - 1] > v:
            outv[j] = outv[j - 1]
            outp[j] = outp[j - 1]
            j -= 1
        outv[j] = v
        outp[j] = t
        if cnt < Q:
            cnt += 1


@nb.njit(cache=True)
def _corner_tops(px, py, A, B, C, cand_ptr, cand_idx, prism_of, ceil_a, ceil_b, ceil_c,
                 alive_idx, Q, tol, topv, topi):
    """Lowest Q plane values at each corner, from coarse candidates when possible."""
    n = px.shape[0]
    fallback = 0
    bv = np.empty(Q)
    bp = np.empty(Q, dtype=np.int64)
    for c in range(n):
        x = px[c]
        y = py[c]
        use_all = True
        p = prism_of[c]
        if p >= 0:
            lo = cand_ptr[p]
            hi = cand_ptr[p + 1]
            if hi - lo >= Q:
                vals = np.empty(hi - lo)
                for t in range(lo, hi):
                    h = cand_idx[t]
                    vals[t - lo] = A[h] * x + B[h] * y + C[h]
                _lowest(vals, Q, bv, bp)
                ceil = ceil_a[p] * x + ceil_b[p] * y + ceil_c[p]
                if bv[Q - 1] < ceil - tol:
                    for r in range(Q):
                        topv[c, r] = bv[r]
                        topi[c, r] = cand_idx[lo + bp[r]]
                    use_all = False
        if use_all:
            if p >= 0:
                fallback += 1
            m = alive_idx.shape[0]
            vals = np.empty(m)
            for t in range(m):
                h = alive_idx[t]
                vals[t] = A[h] * x + B[h] * y + C[h]
            _lowest(vals, Q, bv, bp)
            for r in range(Q):
                topv[c, r] = bv[r]
                topi[c, r] = alive_idx[bp[r]]
    return fallback


@nb.njit(cache=True)
def _tri_check(ca, cb, cc, s, topv, topi, Q, k, cap, tol, stamp, token):
    """Certificate for one lifted triangle at corner rank s; returns union size or -1.

    `stamp` is scratch space indexed by plane, `token` a fresh base value.
    """
    corners = (ca, cb, cc)
    lo = np.empty(3, dtype=np.int64)
    hi = np.empty(3, dtype=np.int64)
    for t in range(3):
        c = corners[t]
        z = 0.5 * (topv[c, s - 1] + topv[c, s])
        a = 0
        while a < Q and topv[c, a] < z - tol:
            a += 1
        b = a
        while b < Q and topv[c, b] < z + tol:
            b += 1
        if b >= Q:
            return -1
        lo[t] = a
        hi[t] = b
    # planes strictly below every lifted corner: stamped token, then token+1
    for i in range(lo[0]):
        stamp[topi[ca, i]] = token
    for i in range(lo[1]):
        h = topi[cb, i]
        if stamp[h] == token:
            stamp[h] = token + 1
    inter = 0
    for i in range(lo[2]):
        if stamp[topi[cc, i]] == token + 1:
            inter += 1
    if inter < k + 1:
        return -1
    union = 0
    for t in range(3):
        c = corners[t]
        for i in range(hi[t]):
            h = topi[c, i]
            if stamp[h] != token + 2:
                stamp[h] = token + 2
                union += 1
    if union > cap:
        return -1
    return union


@nb.njit(cache=True)
def _test_squares(sq_corners, topv, topi, Q, k, cap, tol, s_order, out_diag, out_s, stamp):
    """Pick a diagonal and corner ranks for every square; out_diag = -1 if none works."""
    S = sq_corners.shape[0]
    token = stamp.max() + 1
    for q in range(S):
        c0 = sq_corners[q, 0]
        c1 = sq_corners[q, 1]
        c2 = sq_corners[q, 2]
        c3 = sq_corners[q, 3]
        out_diag[q] = -1
        for d in range(2):
            if d == 0:
                t0 = (c0, c1, c3)
                t1 = (c0, c3, c2)
            else:
                t0 = (c0, c1, c2)
                t1 = (c1, c3, c2)
            s0 = -1
            for s in s_order:
                token += 3
                if _tri_check(t0[0], t0[1], t0[2], s, topv, topi, Q, k, cap, tol, stamp, token) >= 0:
                    s0 = s
                    break
            if s0 < 0:
                continue
            s1 = -1
            for s in s_order:
                token += 3
                if _tri_check(t1[0], t1[1], t1[2], s, topv, topi, Q, k, cap, tol, stamp, token) >= 0:
                    s1 = s
                    break
            if s1 < 0:
                continue
            out_diag[q] = d
            out_s[q, 0] = s0
            out_s[q, 1] = s1
            break


@nb.njit(cache=True)
def _emit_prisms(sq_corners, diag, ranks, cx, cy, topv, topi, Q, tol,
                 ca, cb, cc, sizes, members, stamp):
    """Ceiling plane and conflict list (planes below some lifted corner) per prism."""
    S = sq_corners.shape[0]
    pos = 0
    token = stamp.max()
    for q in range(S):
        c = sq_corners[q]
        if diag[q] == 0:
            tris = ((c[0], c[1], c[3]), (c[0], c[3], c[2]))
        else:
            tris = ((c[0], c[1], c[2]), (c[1], c[3], c[2]))
        for t in range(2):
            s = ranks[q, t]
            tri = tris[t]
            xs = np.empty(3)
            ys = np.empty(3)
            zs = np.empty(3)
            start = pos
            token += 1
            for r in range(3):
                v = tri[r]
                xs[r] = cx[v]
                ys[r] = cy[v]
                z = 0.5 * (topv[v, s - 1] + topv[v, s])
                zs[r] = z
                b = 0
                while b < Q and topv[v, b] < z + tol:
                    b += 1
                for i in range(b):
                    h = topi[v, i]
                    if stamp[h] != token:
                        stamp[h] = token
                        members[pos] = h
                        pos += 1
            p = 2 * q + t
            sizes[p] = pos - start
            # plane through the three lifted corners
            ux = xs[1] - xs[0]
            uy = ys[1] - ys[0]
            uz = zs[1] - zs[0]
            vx = xs[2] - xs[0]
            vy = ys[2] - ys[0]
            vz = zs[2] - zs[0]
            nx = uy * vz - uz * vy
            ny = uz * vx - ux * vz
            nz = ux * vy - uy * vx
            ca[p] = -nx / nz
            cb[p] = -ny / nz
            cc[p] = zs[0] - ca[p] * xs[0] - cb[p] * ys[0]
    return pos


class TriangleCutting:
    """A k-shallow cutting of a plane set, built by `build_triangle_cutting`.

    Prisms are numbered 2*leaf + triangle.  `list_ptr`/`list_idx` hold the
    conflict lists in CSR form as indices into the coefficient arrays the
    cutting was built from.  A trivial cutting is one prism with an
    unbounded ceiling whose list is the whole plane set.
    """

    def __init__(self, k, box, trivial, starts, depth, lx, ly, diag,
                 ceil_a, ceil_b, ceil_c, list_ptr, list_idx, fallbacks=0):
        self.k = k
        self.box = box
        self.trivial = trivial
        self.starts = starts
        self.depth = depth
        self.lx = lx
        self.ly = ly
        self.diag = diag
        self.ceil_a = ceil_a
        self.ceil_b = ceil_b
        self.ceil_c = ceil_c
        self.list_ptr = list_ptr
        self.list_idx = list_idx
        self.fallbacks = fallbacks

    @property
    def n_prisms(self) -> int:
        return len(self.list_ptr) - 1

    def conflict_list(self, p):
        return self.list_idx[self.list_ptr[p]:self.list_ptr[p + 1]]

    def list_sizes(self):
        return np.diff(self.list_ptr)

    def locate(self, x, y) -> int:
        if self.trivial:
            return 0
        x0, y0, size = self.box
        return int(_locate(float(x), float(y), x0, y0, size, self.starts, self.depth,
                           self.lx, self.ly, self.diag))

    def locate_many(self, xs, ys):
        xs = np.ascontiguousarray(xs, dtype=float)
        ys = np.ascontiguousarray(ys, dtype=float)
        if self.trivial:
            return np.zeros(len(xs), dtype=np.int64)
        x0, y0, size = self.box
        return _locate_many(xs, ys, x0, y0, size, self.starts, self.depth,
                            self.lx, self.ly, self.diag)

    def ceiling(self, p, x, y):
        return self.ceil_a[p] * x + self.ceil_b[p] * y + self.ceil_c[p]

    def prism_triangle(self, p):
        """xy corners of prism p's triangle (None for the trivial prism)."""
        if self.trivial:
            return None
        leaf, t = divmod(int(p), 2)
        x0, y0, size = self.box
        h = size / (1 << int(self.depth[leaf]))
        ax, ay = x0 + self.lx[leaf] * h, y0 + self.ly[leaf] * h
        c = [(ax, ay), (ax + h, ay), (ax, ay + h), (ax + h, ay + h)]
        if self.diag[leaf] == 0:
            tri = (0, 1, 3) if t == 0 else (0, 3, 2)
        else:
            tri = (0, 1, 2) if t == 0 else (1, 3, 2)
        return [c[i] for i in tri]

    def drop_members(self, mask):
        """Remove list entries whose plane index is flagged in `mask`."""
        keep = ~mask[self.list_idx]
        owner = np.repeat(np.arange(self.n_prisms), np.diff(self.list_ptr))
        sizes = np.bincount(owner[keep], minlength=self.n_prisms)
        ptr = np.zeros(self.n_prisms + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        self.list_idx = self.list_idx[keep]
        self.list_ptr = ptr


def square_box(xs, ys, margin=0.25):
    """Square box containing the points, padded by `margin` of its side."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) == 0:
        return (-margin, -margin, 1.0 + 2 * margin)
    lo_x, hi_x, lo_y, hi_y = xs.min(), xs.max(), ys.min(), ys.max()
    side = max(hi_x - lo_x, hi_y - lo_y, 1e-3)
    cx, cy = (lo_x + hi_x) / 2, (lo_y + hi_y) / 2
    side *= 1 + 2 * margin
    return (cx - side / 2, cy - side / 2, side)


def _rank_order(k, cap, tries=7):
    """Corner ranks to try, starting from the middle of [k+1, cap-1]."""
    lo, hi = k + 1, cap - 1
    mid = (lo + hi) // 2
    step = max(1, (hi - lo) // (tries - 1))
    order = [mid]
    d = step
    while len(order) < tries and (mid - d >= lo or mid + d <= hi):
        for s in (mid - d, mid + d):
            if lo <= s <= hi and len(order) < tries:
                order.append(s)
        d += step
    return np.array(order, dtype=np.int64)


def build_triangle_cutting(A, B, C, alive_idx, k, box, alpha=2, coarse=None,
                           tol=TOL) -> TriangleCutting:
    """Shallow cutting for level k of the planes `alive_idx` (indices into A, B, C).

    `coarse` is an optional cutting of a superset whose conflict lists,
    restricted to `alive_idx`, seed the corner evaluations.
    """
    alive_idx = np.ascontiguousarray(alive_idx, dtype=np.int64)
    m = len(alive_idx)
    cap = int(alpha * k)
    if m <= cap:
        return TriangleCutting(k, box, True, None, None, None, None, None,
                               np.zeros(1), np.zeros(1), np.array([np.inf]),
                               np.array([0, m], dtype=np.int64), alive_idx.copy())
    if cap - 1 < k + 1:
        raise ValueError("alpha*k too small for a certified cutting")
    Q = cap + 1
    s_order = _rank_order(k, cap)
    x0, y0, size = box
    if coarse is not None and not coarse.trivial:
        c_ptr, c_idx = coarse.list_ptr, coarse.list_idx
        c_a, c_b, c_c = coarse.ceil_a, coarse.ceil_b, coarse.ceil_c
    elif coarse is not None:
        c_ptr, c_idx = coarse.list_ptr, coarse.list_idx
        c_a, c_b, c_c = np.zeros(1), np.zeros(1), np.array([np.inf])
    else:
        c_ptr = np.zeros(1, dtype=np.int64)
        c_idx = np.zeros(0, dtype=np.int64)
        c_a = c_b = c_c = np.zeros(0)

    stamp = np.zeros(len(A), dtype=np.int64)
    leaves_depth, leaves_x, leaves_y, leaves_diag = [], [], [], []
    parts = []
    fallbacks = 0
    sq = np.zeros((1, 2), dtype=np.int64)
    depth = 0
    while len(sq):
        if depth > MAX_DEPTH:
            raise CuttingError("quadtree depth limit reached; input too degenerate")
        cell = size / (1 << depth)
        # corners shared between squares are evaluated once
        ck = np.concatenate([sq, sq + [1, 0], sq + [0, 1], sq + [1, 1]])
        keys = ck[:, 0] * ((1 << depth) + 1) + ck[:, 1]
        uniq, inv = np.unique(keys, return_inverse=True)
        n_sq = len(sq)
        sq_corners = inv.reshape(4, n_sq).T.copy()
        stride = (1 << depth) + 1
        cx = x0 + (uniq // stride) * cell
        cy = y0 + (uniq % stride) * cell
        if coarse is None:
            prism_of = np.full(len(uniq), -1, dtype=np.int64)
        else:
            prism_of = coarse.locate_many(cx, cy)
        topv = np.empty((len(uniq), Q))
        topi = np.empty((len(uniq), Q), dtype=np.int64)
        fallbacks += _corner_tops(cx, cy, A, B, C, c_ptr, c_idx, prism_of, c_a, c_b, c_c,
                                  alive_idx, Q, tol, topv, topi)
        diag = np.empty(n_sq, dtype=np.int64)
        ranks = np.zeros((n_sq, 2), dtype=np.int64)
        _test_squares(sq_corners, topv, topi, Q, k, cap, tol, s_order, diag, ranks, stamp)
        ok = diag >= 0
        if ok.any():
            good = sq_corners[ok]
            n_good = len(good)
            ca = np.empty(2 * n_good)
            cb = np.empty(2 * n_good)
            cc = np.empty(2 * n_good)
            sizes = np.empty(2 * n_good, dtype=np.int64)
            members = np.empty(2 * n_good * cap, dtype=np.int64)
            used = _emit_prisms(good, diag[ok], ranks[ok], cx, cy, topv, topi, Q, tol,
                                ca, cb, cc, sizes, members, stamp)
            parts.append((ca, cb, cc, sizes, members[:used]))
            leaves_depth.append(np.full(n_good, depth, dtype=np.int64))
            leaves_x.append(sq[ok, 0])
            leaves_y.append(sq[ok, 1])
            leaves_diag.append(diag[ok])
        bad = sq[~ok]
        if len(bad):
            b2 = bad * 2
            sq = np.concatenate([b2, b2 + [1, 0], b2 + [0, 1], b2 + [1, 1]])
        else:
            sq = np.zeros((0, 2), dtype=np.int64)
        depth += 1

    depth_arr = np.concatenate(leaves_depth)
    lx = np.concatenate(leaves_x)
    ly = np.concatenate(leaves_y)
    dg = np.concatenate(leaves_diag)
    starts = _leaf_starts(lx, ly, depth_arr)
    order = np.argsort(starts, kind="stable")
    # prisms follow leaf order; reorder leaves and their prism pairs together
    ca = np.concatenate([p[0] for p in parts])
    cb = np.concatenate([p[1] for p in parts])
    cc = np.concatenate([p[2] for p in parts])
    sizes = np.concatenate([p[3] for p in parts])
    members = np.concatenate([p[4] for p in parts])
    ptr = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    prism_order = np.stack([2 * order, 2 * order + 1], axis=1).ravel()
    new_ptr, new_members = ragged_take(ptr, members, prism_order)
    return TriangleCutting(k, box, False, starts[order], depth_arr[order], lx[order],
                           ly[order], dg[order], ca[prism_order], cb[prism_order],
                           cc[prism_order], new_ptr, new_members, fallbacks)
