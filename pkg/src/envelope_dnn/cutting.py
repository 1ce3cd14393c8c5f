"""Vertical shallow cuttings built from a random sample of the planes.

A sample of r planes is drawn and a random level t of its arrangement is
taken as the terrain.  When the sample size is clamped to n the terrain is
an exact level of the input between k and (1+eps)k.  Every convex face of
the terrain is cut into trapezoids by vertical lines through its vertices;
the prism below each trapezoid conflicts with the input planes that dip
below its ceiling somewhere over the trapezoid, which for planes means at
one of its four corners.

Builds are audited (terrain level at sampled points and at all terrain
vertices, conflict-list sizes, Monte-Carlo coverage) and retried with a
fresh sample and level on failure.
"""
from __future__ import annotations

import json
import math

import numba as nb
import numpy as np

from .tlevel import extract_t_level, trapezoidate
from .tricut import TOL, CuttingError

C_SAMPLE = 4.0
EPS = 0.5
RETRY_BUDGET = 16
AUDIT_POINTS = 1000


def sample_size(n: int, k: int, eps: float = EPS, c: float = C_SAMPLE) -> int:
    if n <= 1:
        return n
    return min(n, math.ceil(c / eps**2 * (n / k) * math.log2(n)))


def choose_level(n: int, k: int, eps: float, rng, c: float = C_SAMPLE) -> int:
    """Random level index for the sampled arrangement.

    With a clamped sample (r = n) the level is uniform in [k, (1+eps)k];
    otherwise uniform in [(1+eps/3)lam, (1+eps/2)lam] with
    lam = (c/eps^2) log2 n, the expected sample level of input level k.
    """
    r = sample_size(n, k, eps, c)
    if r >= n:
        lo, hi = k, int(math.floor((1 + eps) * k))
    else:
        lam = c / eps**2 * math.log2(n)
        lo, hi = math.ceil((1 + eps / 3) * lam), int(math.floor((1 + eps / 2) * lam))
    hi = max(lo, hi)
    return int(rng.integers(lo, hi + 1))


@nb.njit(cache=True)
def _level_counts(xs, ys, zs, A, B, C, tol):
    """Per point: planes strictly below (minus tol) and planes at or below (plus tol)."""
    m = xs.shape[0]
    below = np.zeros(m, dtype=np.int64)
    upto = np.zeros(m, dtype=np.int64)
    for i in range(m):
        x, y, z = xs[i], ys[i], zs[i]
        b = 0
        u = 0
        for h in range(A.shape[0]):
            v = A[h] * x + B[h] * y + C[h]
            if v < z - tol:
                b += 1
            if v <= z + tol:
                u += 1
        below[i] = b
        upto[i] = u
    return below, upto


@nb.njit(cache=True)
def _trap_conflicts(traps, ga, gb, gc, A, B, C, tol):
    """Planes below the ceiling at some trapezoid corner, in CSR form."""
    T = traps.shape[0]
    ptr = np.zeros(T + 1, dtype=np.int64)
    for pass_ in range(2):
        if pass_ == 1:
            out = np.empty(ptr[T], dtype=np.int64)
        for p in range(T):
            x0, x1 = traps[p, 0], traps[p, 1]
            c0 = np.array([x0, x1, x0, x1])
            c1 = np.array([traps[p, 2], traps[p, 3], traps[p, 4], traps[p, 5]])
            m = 0
            for h in range(A.shape[0]):
                hit = False
                for q in range(4):
                    x, y = c0[q], c1[q]
                    if A[h] * x + B[h] * y + C[h] < ga[p] * x + gb[p] * y + gc[p] - tol:
                        hit = True
                        break
                if hit:
                    if pass_ == 1:
                        out[ptr[p] + m] = h
                    m += 1
            if pass_ == 0:
                ptr[p + 1] = ptr[p] + m
    return ptr, out


@nb.njit(cache=True)
def _bucket_index(traps, x0, y0, cw, ch, G):
    T = traps.shape[0]
    counts = np.zeros(G * G + 1, dtype=np.int64)
    lo = np.empty((T, 4), dtype=np.int64)
    for p in range(T):
        a = int((traps[p, 0] - x0) / cw)
        b = int((traps[p, 1] - x0) / cw)
        c = int((min(traps[p, 2], traps[p, 3]) - y0) / ch)
        d = int((max(traps[p, 4], traps[p, 5]) - y0) / ch)
        a, b = max(0, min(G - 1, a)), max(0, min(G - 1, b))
        c, d = max(0, min(G - 1, c)), max(0, min(G - 1, d))
        lo[p, 0], lo[p, 1], lo[p, 2], lo[p, 3] = a, b, c, d
        for i in range(a, b + 1):
            for j in range(c, d + 1):
                counts[i * G + j + 1] += 1
    ptr = np.cumsum(counts)
    fill = ptr[:-1].copy()
    idx = np.empty(ptr[-1], dtype=np.int64)
    for p in range(T):
        for i in range(lo[p, 0], lo[p, 1] + 1):
            for j in range(lo[p, 2], lo[p, 3] + 1):
                idx[fill[i * G + j]] = p
                fill[i * G + j] += 1
    return ptr, idx


@nb.njit(cache=True)
def _inside(traps, p, x, y, e):
    x0, x1 = traps[p, 0], traps[p, 1]
    if x < x0 - e or x > x1 + e:
        return False
    s = (x - x0) / (x1 - x0)
    lo = traps[p, 2] + s * (traps[p, 3] - traps[p, 2])
    hi = traps[p, 4] + s * (traps[p, 5] - traps[p, 4])
    return lo - e <= y <= hi + e


@nb.njit(cache=True)
def _locate_trap(traps, bptr, bidx, x0, y0, x1, y1, G, x, y):
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        return -1
    i = min(G - 1, int((x - x0) / (x1 - x0) * G))
    j = min(G - 1, int((y - y0) / (y1 - y0) * G))
    b = i * G + j
    for t in range(bptr[b], bptr[b + 1]):
        if _inside(traps, bidx[t], x, y, 0.0):
            return bidx[t]
    for t in range(bptr[b], bptr[b + 1]):
        if _inside(traps, bidx[t], x, y, 1e-9):
            return bidx[t]
    return -1


@nb.njit(cache=True)
def _count_containing(traps, bptr, bidx, x0, y0, x1, y1, G, x, y):
    """Trapezoids containing (x, y) strictly inside; for disjointness audits."""
    i = min(G - 1, int((x - x0) / (x1 - x0) * G))
    j = min(G - 1, int((y - y0) / (y1 - y0) * G))
    b = i * G + j
    c = 0
    for t in range(bptr[b], bptr[b + 1]):
        if _inside(traps, bidx[t], x, y, -1e-9):
            c += 1
    return c


def _rect(box):
    """Accept (x0, y0, side) squares or (x0, y0, x1, y1) rectangles."""
    if len(box) == 3:
        x0, y0, s = box
        return (float(x0), float(y0), float(x0 + s), float(y0 + s))
    return tuple(float(v) for v in box)


class ApproxLevelTerrain:
    """A level of a random sample's arrangement, used as a cutting's ceiling.

    `sample` holds input indices; face planes are reported as input indices.
    """

    def __init__(self, k, eps, t, sample, level, clamped):
        self.k = k
        self.eps = eps
        self.t = t
        self.sample = sample
        self.level = level
        self.clamped = clamped
        self.face_plane = sample[level.face_plane]

    @property
    def n_faces(self):
        return self.level.n_faces

    def vertex_points(self, A, B, C):
        """(x, y, z) of every face vertex on its face's plane."""
        L = self.level
        face = np.repeat(np.arange(L.n_faces), np.diff(L.vptr))
        g = self.face_plane[face]
        return L.vx, L.vy, A[g] * L.vx + B[g] * L.vy + C[g]


class ShallowCutting:
    """Prisms below the trapezoids of a terrain, with conflict lists.

    Prism p has ceiling plane `ceil_plane[p]` (input index) over trapezoid
    `traps[p] = [x0, x1, ylo(x0), ylo(x1), yhi(x0), yhi(x1)]`.  Conflict
    lists are stored once per list; `list_of[p]` names prism p's list.
    """

    trivial = False

    def __init__(self, k, eps, t, c, box, terrain, traps, ceil_plane, list_of, list_ptr,
                 list_idx, attempts, seed=None):
        self.k = k
        self.eps = eps
        self.t = t
        self.c = c
        self.box = box
        self.terrain = terrain
        self.traps = traps
        self.ceil_plane = ceil_plane
        self.list_of = list_of
        self.list_ptr = list_ptr
        self.list_idx = list_idx
        self.attempts = attempts
        self.seed = seed
        x0, y0, x1, y1 = box
        self.G = max(1, int(math.sqrt(len(traps) / 2)))
        self.bptr, self.bidx = _bucket_index(traps, x0, y0, (x1 - x0) / self.G,
                                             (y1 - y0) / self.G, self.G)

    @property
    def n_prisms(self) -> int:
        return len(self.traps)

    def conflict_list(self, p):
        g = self.list_of[p]
        return self.list_idx[self.list_ptr[g]:self.list_ptr[g + 1]]

    def list_sizes(self):
        return np.diff(self.list_ptr)[self.list_of]

    def locate(self, x, y) -> int:
        x0, y0, x1, y1 = self.box
        return int(_locate_trap(self.traps, self.bptr, self.bidx, x0, y0, x1, y1, self.G,
                                float(x), float(y)))

    def count_containing(self, x, y) -> int:
        x0, y0, x1, y1 = self.box
        return int(_count_containing(self.traps, self.bptr, self.bidx, x0, y0, x1, y1,
                                     self.G, float(x), float(y)))

    def ceiling(self, p, x, y, A, B, C):
        g = self.ceil_plane[p]
        return A[g] * x + B[g] * y + C[g]

    def to_json(self, ids=None) -> str:
        ids = np.arange(int(self.list_idx.max(initial=-1)) + 1) if ids is None else np.asarray(ids)
        prisms = []
        for p in range(self.n_prisms):
            x0, x1, l0, l1, h0, h1 = (float(v) for v in self.traps[p])
            prisms.append({"ceiling": int(ids[self.ceil_plane[p]]), "x": [x0, x1],
                           "lower": [l0, l1], "upper": [h0, h1],
                           "conflict": [int(v) for v in ids[self.conflict_list(p)]]})
        doc = {"k": self.k, "eps": self.eps, "t": self.t, "c": self.c, "seed": self.seed,
               "box": list(self.box), "attempts": self.attempts,
               "sample": [int(v) for v in ids[self.terrain.sample]], "prisms": prisms}
        return json.dumps(doc)


def _audit_terrain(terrain, A, B, C, box, k, eps, rng, n_points):
    """Count audit failures: sampled points, then every terrain vertex (closure semantics)."""
    hi = (1 + eps) * k
    x0, y0, x1, y1 = box
    L = terrain.level
    xs = rng.uniform(x0, x1, n_points)
    ys = rng.uniform(y0, y1, n_points)
    zs = terrain_height(terrain, A, B, C, xs, ys)
    below, _ = _level_counts(xs, ys, zs, A, B, C, TOL)
    bad = int(((below < k) | (below > hi)).sum())
    vx, vy, vz = terrain.vertex_points(A, B, C)
    vb, vu = _level_counts(vx, vy, vz, A, B, C, TOL)
    bad += int(((vu < k) | (vb > hi)).sum())
    return bad


def terrain_height(terrain, A, B, C, xs, ys):
    """Height of the terrain at each (x, y) by brute force over the sample."""
    S = terrain.sample
    vals = np.outer(np.asarray(xs), A[S]) + np.outer(np.asarray(ys), B[S]) + C[S]
    return np.partition(vals, terrain.t, axis=1)[:, terrain.t]


def build_approx_level(A, B, C, k, box, eps=EPS, rng=None, c=C_SAMPLE,
                       retry_budget=RETRY_BUDGET, audit_points=AUDIT_POINTS):
    """Random level of a random sample lying between input levels k and (1+eps)k.

    Returns (terrain, attempts).  Raises CuttingError after retry_budget
    failed audits.
    """
    rng = np.random.default_rng(rng)
    A, B, C = (np.ascontiguousarray(v, dtype=float) for v in (A, B, C))
    n = len(A)
    box = _rect(box)
    r = sample_size(n, k, eps, c)
    for attempt in range(1, retry_budget + 1):
        sample = np.sort(rng.choice(n, size=r, replace=False)) if r < n else np.arange(n)
        t = choose_level(n, k, eps, rng, c)
        saturated = t > r - 1
        t = min(t, r - 1)
        level = extract_t_level(A[sample], B[sample], C[sample], t, box,
                                seed=int(rng.integers(2**31)))
        terrain = ApproxLevelTerrain(k, eps, t, sample, level, r >= n)
        if level.overflow:
            continue
        if saturated or _audit_terrain(terrain, A, B, C, box, k, eps, rng, audit_points) == 0:
            return terrain, attempt
    raise CuttingError(f"approximate level for k={k} failed {retry_budget} audits")


def validate_cutting(cut, A, B, C, rng=None, n_points=AUDIT_POINTS, tol=TOL):
    """Certificate of list sizes plus Monte-Carlo coverage and disjointness."""
    rng = np.random.default_rng(rng)
    sizes = np.diff(cut.list_ptr)
    x0, y0, x1, y1 = cut.box
    xs = rng.uniform(x0, x1, n_points)
    ys = rng.uniform(y0, y1, n_points)
    js = rng.integers(0, cut.k + 1, n_points)
    vals = np.outer(xs, A) + np.outer(ys, B) + C
    vals.sort(axis=1)
    zs = vals[np.arange(n_points), np.minimum(js, len(A) - 1)]
    uncovered = overlaps = 0
    for x, y, z in zip(xs, ys, zs):
        p = cut.locate(x, y)
        if p < 0 or z > cut.ceiling(p, x, y, A, B, C) + tol:
            uncovered += 1
        if cut.count_containing(x, y) > 1:
            overlaps += 1
    lo, hi = cut.k, (1 + 2 * cut.eps) * cut.k
    return {"min_size": int(sizes.min()) if len(sizes) else 0,
            "max_size": int(sizes.max()) if len(sizes) else 0,
            "size_violations": int(((sizes < lo) | (sizes > hi)).sum()),
            "uncovered": uncovered, "overlaps": overlaps,
            "ok": bool(((sizes >= lo) & (sizes <= hi)).all() and uncovered == 0 and overlaps == 0)}


def build_cutting(A, B, C, k, box, eps=EPS, rng=None, c=C_SAMPLE, retry_budget=RETRY_BUDGET,
                  audit_points=AUDIT_POINTS, validate=True) -> ShallowCutting:
    """Vertical k-shallow cutting of the planes over `box`, retried until certified."""
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    A, B, C = (np.ascontiguousarray(v, dtype=float) for v in (A, B, C))
    if not 1 <= k < len(A):
        raise ValueError(f"need 1 <= k < n, got k={k}, n={len(A)}")
    box = _rect(box)
    attempts = 0
    while attempts < retry_budget:
        terrain, used = build_approx_level(A, B, C, k, box, eps, rng, c,
                                           retry_budget - attempts, audit_points)
        attempts += used
        face, traps = trapezoidate(terrain.level)
        ceil_plane = terrain.face_plane[face]
        if terrain.clamped:
            # inside one face every plane is entirely above or below the ceiling
            L = terrain.level
            list_of = face
            list_ptr = np.arange(L.n_faces + 1, dtype=np.int64) * L.t
            list_idx = terrain.sample[L.face_below].astype(np.int64)
        else:
            list_ptr, list_idx = _trap_conflicts(traps, A[ceil_plane], B[ceil_plane],
                                                 C[ceil_plane], A, B, C, TOL)
            list_of = np.arange(len(traps), dtype=np.int64)
        cut = ShallowCutting(k, eps, terrain.t, c, box, terrain, traps, ceil_plane, list_of,
                             list_ptr, list_idx, attempts, seed)
        if not validate or validate_cutting(cut, A, B, C, rng, audit_points)["ok"]:
            return cut
    raise CuttingError(f"cutting for k={k} not certified within {retry_budget} attempts")


class LadderCutting:
    """Adapter giving a sampled cutting the per-prism list layout of the dynamic structure."""

    def __init__(self, k, cut, idx, trivial=False):
        self.k = k
        self.cut = cut
        self.trivial = trivial
        if trivial:
            self.list_ptr = np.array([0, len(idx)], dtype=np.int64)
            self.list_idx = np.asarray(idx, dtype=np.int64)
        else:
            owner = cut.list_of
            sizes = np.diff(cut.list_ptr)[owner]
            self.list_ptr = np.zeros(len(owner) + 1, dtype=np.int64)
            np.cumsum(sizes, out=self.list_ptr[1:])
            self.list_idx = np.concatenate(
                [cut.list_idx[cut.list_ptr[g]:cut.list_ptr[g + 1]] for g in owner]
            ) if len(owner) else np.zeros(0, dtype=np.int64)
            self.list_idx = np.asarray(idx)[self.list_idx]

    @property
    def n_prisms(self) -> int:
        return len(self.list_ptr) - 1

    def conflict_list(self, p):
        return self.list_idx[self.list_ptr[p]:self.list_ptr[p + 1]]

    def list_sizes(self):
        return np.diff(self.list_ptr)

    def locate(self, x, y) -> int:
        return 0 if self.trivial else self.cut.locate(x, y)

    def drop_members(self, mask):
        keep = ~mask[self.list_idx]
        owner = np.repeat(np.arange(self.n_prisms), np.diff(self.list_ptr))
        sizes = np.bincount(owner[keep], minlength=self.n_prisms)
        ptr = np.zeros(self.n_prisms + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        self.list_idx = self.list_idx[keep]
        self.list_ptr = ptr


def build_cutting_for_ladder(A, B, C, idx, k, box, rng, eps=EPS, c=C_SAMPLE):
    """Sampled cutting of planes A[idx], B[idx], C[idx] with lists as indices into A."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) <= (1 + 2 * eps) * k:
        return LadderCutting(k, None, idx, trivial=True)
    cut = build_cutting(A[idx], B[idx], C[idx], k, box, eps, rng, c)
    return LadderCutting(k, cut, idx)
