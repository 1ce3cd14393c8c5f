"""Exact t-level of a set of planes over a rectangle, face by face.

A face of the t-level lies on one plane g and is the cell of the line
arrangement {g = h} on which exactly t planes are below g, so it is convex
and identified by (g, set of planes below).  Faces are found by a traversal:
crossing an edge g = h moves the level onto h, and the below-set either
stays the same (h was above) or swaps h for g (h was below).  Below-sets are
deduplicated with XOR hashing.
"""
from __future__ import annotations

import numba as nb
import numpy as np

EDGE_EPS = 1e-12


@nb.njit(cache=True)
def _clip(px, py, lab, nv, a, b, c, h, qx, qy, qlab):
    """Keep the part of a convex polygon with a*x + b*y + c <= 0; edges on the cut get label h."""
    m = 0
    for i in range(nv):
        j = i + 1 if i + 1 < nv else 0
        sp = a * px[i] + b * py[i] + c
        sq = a * px[j] + b * py[j] + c
        if sp <= 0.0:
            qx[m] = px[i]
            qy[m] = py[i]
            qlab[m] = lab[i]
            m += 1
            if sq > 0.0:
                s = sp / (sp - sq)
                qx[m] = px[i] + s * (px[j] - px[i])
                qy[m] = py[i] + s * (py[j] - py[i])
                qlab[m] = h
                m += 1
        elif sq <= 0.0:
            s = sp / (sp - sq)
            qx[m] = px[i] + s * (px[j] - px[i])
            qy[m] = py[i] + s * (py[j] - py[i])
            qlab[m] = lab[i]
            m += 1
    return m


@nb.njit(cache=True)
def _face_polygon(g, stamp, token, A, B, C, x0, y0, x1, y1, px, py, lab, qx, qy, qlab):
    """Cell of plane g where exactly the stamped planes lie below it; returns vertex count."""
    px[0], py[0], lab[0] = x0, y0, -1
    px[1], py[1], lab[1] = x1, y0, -1
    px[2], py[2], lab[2] = x1, y1, -1
    px[3], py[3], lab[3] = x0, y1, -1
    nv = 4
    for h in range(A.shape[0]):
        if h == g:
            continue
        a = A[h] - A[g]
        b = B[h] - B[g]
        c = C[h] - C[g]
        if stamp[h] != token:
            a, b, c = -a, -b, -c
        inside = True
        for i in range(nv):
            if a * px[i] + b * py[i] + c > 0.0:
                inside = False
                break
        if inside:
            continue
        nv = _clip(px, py, lab, nv, a, b, c, h, qx, qy, qlab)
        for i in range(nv):
            px[i] = qx[i]
            py[i] = qy[i]
            lab[i] = qlab[i]
        if nv < 3:
            return 0
    return nv


@nb.njit(cache=True)
def _grow_i(arr, need):
    if need <= arr.shape[0]:
        return arr
    out = np.empty(max(need, 2 * arr.shape[0]), dtype=arr.dtype)
    out[:arr.shape[0]] = arr
    return out


@nb.njit(cache=True)
def _grow_f(arr, need):
    if need <= arr.shape[0]:
        return arr
    out = np.empty(max(need, 2 * arr.shape[0]), dtype=arr.dtype)
    out[:arr.shape[0]] = arr
    return out


@nb.njit(cache=True)
def _traverse(A, B, C, t, g0, below0, x0, y0, x1, y1, rz, rg, max_faces):
    n = A.shape[0]
    cap = 1024
    fg = np.empty(cap, dtype=np.int64)
    fb = np.empty(cap * max(t, 1), dtype=np.int32)
    vptr = np.zeros(cap + 1, dtype=np.int64)
    vx = np.empty(cap * 6, dtype=np.float64)
    vy = np.empty(cap * 6, dtype=np.float64)
    seen = dict()
    key = rg[g0]
    for i in range(t):
        fb[i] = below0[i]
        key ^= rz[below0[i]]
    fg[0] = g0
    seen[np.int64(key)] = 0
    fkey = np.empty(cap, dtype=np.uint64)
    fkey[0] = key
    nf = 1
    stamp = np.zeros(n, dtype=np.int64)
    px = np.empty(n + 8)
    py = np.empty(n + 8)
    lab = np.empty(n + 8, dtype=np.int64)
    qx = np.empty(n + 8)
    qy = np.empty(n + 8)
    qlab = np.empty(n + 8, dtype=np.int64)
    f = 0
    nvert = 0
    overflow = False
    while f < nf:
        g = fg[f]
        token = f + 1
        for i in range(t):
            stamp[fb[f * t + i]] = token
        nv = _face_polygon(g, stamp, token, A, B, C, x0, y0, x1, y1, px, py, lab, qx, qy, qlab)
        vx = _grow_f(vx, nvert + nv)
        vy = _grow_f(vy, nvert + nv)
        for i in range(nv):
            vx[nvert + i] = px[i]
            vy[nvert + i] = py[i]
        nvert += nv
        if f + 2 > vptr.shape[0]:
            vptr = _grow_i(vptr, f + 2)
        vptr[f + 1] = nvert
        for i in range(nv):
            h = lab[i]
            if h < 0:
                continue
            j = i + 1 if i + 1 < nv else 0
            if abs(px[j] - px[i]) + abs(py[j] - py[i]) < EDGE_EPS:
                continue
            k = fkey[f] ^ rg[g] ^ rg[h]
            swap = stamp[h] == token
            if swap:
                k ^= rz[h] ^ rz[g]
            ik = np.int64(k)
            if ik in seen:
                continue
            if nf >= max_faces:
                overflow = True
                continue
            seen[ik] = nf
            fg = _grow_i(fg, nf + 1)
            fkey = _grow_i(fkey, nf + 1)
            fb = _grow_i(fb, (nf + 1) * t)
            fg[nf] = h
            fkey[nf] = k
            base = nf * t
            for r in range(t):
                m = fb[f * t + r]
                fb[base + r] = g if (swap and m == h) else m
            nf += 1
        f += 1
    return fg[:nf], fb[:nf * t], vptr[:nf + 1], vx[:nvert], vy[:nvert], overflow


@nb.njit(cache=True)
def _trapezoids(vptr, vx, vy, eps):
    """Split each convex face into x-monotone trapezoids.

    Returns face index, [x0, x1, ylo0, ylo1, yhi0, yhi1] and the
    (lower, upper) bounding edge of each trapezoid as an offset into the
    vertex arrays (edge i runs from vertex i to the next one of its face).
    """
    nf = vptr.shape[0] - 1
    cap = 4 * nf + 16
    face = np.empty(cap, dtype=np.int64)
    out = np.empty((cap, 6))
    edges = np.empty((cap, 2), dtype=np.int64)
    m = 0
    xs = np.empty(64)
    for f in range(nf):
        s, e = vptr[f], vptr[f + 1]
        nv = e - s
        if nv < 3:
            continue
        if nv > xs.shape[0]:
            xs = np.empty(2 * nv)
        for i in range(nv):
            xs[i] = vx[s + i]
        xsort = np.sort(xs[:nv])
        for r in range(nv - 1):
            xa, xb = xsort[r], xsort[r + 1]
            if xb - xa <= eps:
                continue
            xm = 0.5 * (xa + xb)
            lo_a = np.inf
            hi_a = -np.inf
            lo_b = 0.0
            hi_b = 0.0
            lo_m = np.inf
            hi_m = -np.inf
            lo_e = -1
            hi_e = -1
            for i in range(nv):
                j = i + 1 if i + 1 < nv else 0
                ax, ay = vx[s + i], vy[s + i]
                bx, by = vx[s + j], vy[s + j]
                if (ax - xm) * (bx - xm) >= 0.0:
                    continue
                sl = (by - ay) / (bx - ax)
                ym = ay + sl * (xm - ax)
                if ym < lo_m:
                    lo_m = ym
                    lo_e = s + i
                    lo_a = ay + sl * (xa - ax)
                    lo_b = ay + sl * (xb - ax)
                if ym > hi_m:
                    hi_m = ym
                    hi_e = s + i
                    hi_a = ay + sl * (xa - ax)
                    hi_b = ay + sl * (xb - ax)
            if not (hi_m > lo_m):
                continue
            if m >= cap:
                cap *= 2
                nface = np.empty(cap, dtype=np.int64)
                nface[:m] = face[:m]
                face = nface
                nout = np.empty((cap, 6))
                nout[:m] = out[:m]
                out = nout
                nedges = np.empty((cap, 2), dtype=np.int64)
                nedges[:m] = edges[:m]
                edges = nedges
            face[m] = f
            out[m, 0] = xa
            out[m, 1] = xb
            out[m, 2] = lo_a
            out[m, 3] = lo_b
            out[m, 4] = hi_a
            out[m, 5] = hi_b
            edges[m, 0] = lo_e
            edges[m, 1] = hi_e
            m += 1
    return face[:m], out[:m], edges[:m]


class TLevel:
    """Faces of the t-level of planes (A, B, C) over box (x0, y0, x1, y1).

    face_plane[f] is the plane carrying face f and face_below[f] the t planes
    under it; face_vertices(f) gives the convex polygon.
    """

    def __init__(self, t, box, face_plane, face_below, vptr, vx, vy, overflow):
        self.t = t
        self.box = box
        self.face_plane = face_plane
        self.face_below = face_below
        self.vptr = vptr
        self.vx = vx
        self.vy = vy
        self.overflow = overflow

    @property
    def n_faces(self):
        return len(self.face_plane)

    def below(self, f):
        return self.face_below[f * self.t:(f + 1) * self.t]

    def face_vertices(self, f):
        s, e = self.vptr[f], self.vptr[f + 1]
        return np.column_stack([self.vx[s:e], self.vy[s:e]])

    def n_vertices(self):
        return int(self.vptr[-1])


def extract_t_level(A, B, C, t, box, seed=0, max_faces=5_000_000) -> TLevel:
    """Traverse the t-level (0-based: t planes strictly below) of the planes over box."""
    A, B, C = (np.ascontiguousarray(v, dtype=float) for v in (A, B, C))
    n = len(A)
    if not 0 <= t < n:
        raise ValueError(f"level {t} out of range for {n} planes")
    x0, y0, x1, y1 = (float(v) for v in box)
    rng = np.random.default_rng(seed)
    rz = rng.integers(0, 2**63, size=n, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    rg = rng.integers(0, 2**63, size=n, dtype=np.uint64) * np.uint64(2)
    # seed face at a generic interior point
    sx = x0 + (x1 - x0) * (0.5 + 0.01 * rng.random())
    sy = y0 + (y1 - y0) * (0.5 + 0.01 * rng.random())
    v = A * sx + B * sy + C
    order = np.lexsort((np.arange(n), v))
    g0 = int(order[t])
    below0 = np.sort(order[:t]).astype(np.int32)
    fg, fb, vptr, vx, vy, overflow = _traverse(A, B, C, t, g0, below0, x0, y0, x1, y1,
                                               rz, rg, max_faces)
    return TLevel(t, (x0, y0, x1, y1), fg, fb, vptr, vx, vy, bool(overflow))


def trapezoidate(level: TLevel, eps=EDGE_EPS):
    """(face index, [x0, x1, ylo(x0), ylo(x1), yhi(x0), yhi(x1)]) per trapezoid."""
    face, traps, _ = _trapezoids(level.vptr, level.vx, level.vy, eps)
    return face, traps
