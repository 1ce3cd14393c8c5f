"""Fully dynamic graph connectivity with level-structured spanning forests.

Every edge carries a level.  Level i keeps a spanning forest of the edges
with level >= i, each tree stored as an Euler tour in a treap.  When a tree
edge is deleted, the smaller side is searched level by level for a
replacement; edges examined without success move up one level, which bounds
the total work per edge by the number of levels.
"""
from __future__ import annotations

import math
import random


class MissingVertexError(KeyError):
    pass


class MissingEdgeError(KeyError):
    pass


class VertexNotIsolatedError(ValueError):
    pass


class _Node:
    __slots__ = ("left", "right", "parent", "prio", "size", "verts", "tree_mark", "adj_mark",
                 "own_tree", "own_adj", "vertex", "arc")

    def __init__(self, prio, vertex=None, arc=None):
        self.left = self.right = self.parent = None
        self.prio = prio
        self.vertex = vertex
        self.arc = arc
        self.own_tree = 0
        self.own_adj = 0
        self.size = 1
        self.verts = 1 if vertex is not None else 0
        self.tree_mark = 0
        self.adj_mark = 0


def _pull(t):
    size, verts = 1, (1 if t.vertex is not None else 0)
    tm, am = t.own_tree, t.own_adj
    for c in (t.left, t.right):
        if c is not None:
            size += c.size
            verts += c.verts
            tm += c.tree_mark
            am += c.adj_mark
    t.size, t.verts, t.tree_mark, t.adj_mark = size, verts, tm, am


def _pull_up(t):
    while t is not None:
        _pull(t)
        t = t.parent


def _root(t):
    while t.parent is not None:
        t = t.parent
    return t


def _rank(t):
    """0-based position of t in its sequence."""
    r = t.left.size if t.left is not None else 0
    while t.parent is not None:
        p = t.parent
        if p.right is t:
            r += 1 + (p.left.size if p.left is not None else 0)
        t = p
    return r


def _merge(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a.prio > b.prio:
        r = _merge(a.right, b)
        a.right = r
        r.parent = a
        _pull(a)
        return a
    l = _merge(a, b.left)
    b.left = l
    l.parent = b
    _pull(b)
    return b


def _split(t, k):
    """Split sequence t into its first k nodes and the rest."""
    if t is None:
        return None, None
    ls = t.left.size if t.left is not None else 0
    if k <= ls:
        a, b = _split(t.left, k)
        t.left = b
        if b is not None:
            b.parent = t
        if a is not None:
            a.parent = None
        _pull(t)
        t.parent = None
        return a, t
    a, b = _split(t.right, k - ls - 1)
    t.right = a
    if a is not None:
        a.parent = t
    if b is not None:
        b.parent = None
    _pull(t)
    t.parent = None
    return t, b


def _first_marked(t, attr, own):
    while True:
        if t.left is not None and getattr(t.left, attr) > 0:
            t = t.left
        elif getattr(t, own) > 0:
            return t
        else:
            t = t.right


class _Forest:
    """Euler-tour forest for one level."""

    def __init__(self, rng):
        self.rng = rng
        self.vnode = {}
        self.arcs = {}

    def add_vertex(self, v):
        self.vnode[v] = _Node(self.rng.random(), vertex=v)

    def remove_vertex(self, v):
        del self.vnode[v]

    def connected(self, u, v):
        return u == v or _root(self.vnode[u]) is _root(self.vnode[v])

    def tree_size(self, v):
        return _root(self.vnode[v]).verts

    def _reroot(self, v):
        n = self.vnode[v]
        r = _root(n)
        k = _rank(n)
        a, b = _split(r, k)
        return _merge(b, a)

    def link(self, u, v):
        tu = self._reroot(u)
        tv = self._reroot(v)
        a1 = _Node(self.rng.random(), arc=(u, v))
        a2 = _Node(self.rng.random(), arc=(v, u))
        self.arcs[(u, v)] = a1
        self.arcs[(v, u)] = a2
        _merge(_merge(_merge(tu, a1), tv), a2)
        return a1

    def cut(self, u, v):
        a1 = self.arcs.pop((u, v))
        a2 = self.arcs.pop((v, u))
        r = _root(a1)
        i, j = _rank(a1), _rank(a2)
        if i > j:
            i, j = j, i
        left, rest = _split(r, i)
        mid, right = _split(rest, j - i + 1)
        # mid = arc, inner tour, arc
        _, inner = _split(mid, 1)
        inner, _ = _split(inner, inner.size - 1 if inner is not None else 0)
        _merge(left, right)

    def set_tree_mark(self, u, v, on):
        a = self.arcs[(u, v)] if (u, v) in self.arcs else None
        if a is None:
            return
        a.own_tree = 1 if on else 0
        _pull_up(a)

    def set_adj_mark(self, v, on):
        n = self.vnode[v]
        val = 1 if on else 0
        if n.own_adj != val:
            n.own_adj = val
            _pull_up(n)

    def iter_marked(self, v, attr, own):
        """Nodes carrying `own` in v's tree; the tree may change between yields."""
        while True:
            r = _root(self.vnode[v])
            if getattr(r, attr) == 0:
                return
            yield _first_marked(r, attr, own)


class DynGraph:
    """Undirected graph under edge insertions and deletions with connectivity queries.

    Vertices are arbitrary hashable keys.  The number of levels tracks
    log2 of a vertex capacity that doubles or halves, with a full rebuild,
    whenever the vertex count leaves [capacity/4, capacity].
    """

    def __init__(self, vertices=(), seed=0):
        self.rng = random.Random(seed)
        self.vertices = set()
        self.level = {}
        self.nontree = []
        self.forests = []
        self.capacity = 1
        self.rebuilds = 0
        self.replacement_scans = 0
        self._setup_levels(1)
        for v in vertices:
            self.add_vertex(v)

    @property
    def n_levels(self):
        return len(self.forests)

    def _setup_levels(self, capacity):
        self.capacity = capacity
        L = max(1, int(math.ceil(math.log2(max(capacity, 2)))) + 1)
        self.forests = [_Forest(self.rng) for _ in range(L)]
        self.nontree = [dict() for _ in range(L)]
        for v in self.vertices:
            for i in range(L):
                self.forests[i].add_vertex(v)
                self.nontree[i][v] = set()

    def _rebuild(self, capacity):
        self.rebuilds += 1
        edges = list(self.level)
        self.level = {}
        self._setup_levels(capacity)
        for u, v in edges:
            self._insert(u, v)

    def add_vertex(self, v):
        if v in self.vertices:
            return
        self.vertices.add(v)
        for i, f in enumerate(self.forests):
            f.add_vertex(v)
            self.nontree[i][v] = set()
        if len(self.vertices) > self.capacity:
            self._rebuild(self.capacity * 2)

    def remove_isolated_vertex(self, v):
        self._check(v)
        if not self.degree_is_zero(v):
            raise VertexNotIsolatedError(v)
        self.vertices.discard(v)
        for i, f in enumerate(self.forests):
            f.remove_vertex(v)
            del self.nontree[i][v]
        if self.capacity > 1 and len(self.vertices) < self.capacity // 4:
            self._rebuild(self.capacity // 2)

    def degree_is_zero(self, v):
        return self.forests[0].tree_size(v) == 1 and not any(self.nontree[i][v] for i in range(self.n_levels))

    def _check(self, *vs):
        for v in vs:
            if v not in self.vertices:
                raise MissingVertexError(v)

    @staticmethod
    def _key(u, v):
        return (u, v) if repr(u) <= repr(v) else (v, u)

    def has_edge(self, u, v):
        return self._key(u, v) in self.level

    def connected(self, u, v) -> bool:
        self._check(u, v)
        return self.forests[0].connected(u, v)

    def component_key(self, v):
        """Identifier shared by exactly the vertices of v's component (until the next update)."""
        self._check(v)
        return id(_root(self.forests[0].vnode[v]))

    def insert_edge(self, u, v):
        self._check(u, v)
        if u == v:
            return
        if self._key(u, v) in self.level:
            return
        self._insert(u, v)

    def _insert(self, u, v):
        e = self._key(u, v)
        self.level[e] = (0, False)
        f0 = self.forests[0]
        if not f0.connected(u, v):
            f0.link(u, v)
            f0.set_tree_mark(e[0], e[1], True)
            self.level[e] = (0, True)
        else:
            self._add_nontree(e, 0)

    def _add_nontree(self, e, i):
        u, v = e
        self.nontree[i][u].add(v)
        self.nontree[i][v].add(u)
        self.level[e] = (i, False)
        self.forests[i].set_adj_mark(u, True)
        self.forests[i].set_adj_mark(v, True)

    def _remove_nontree(self, e, i):
        u, v = e
        self.nontree[i][u].discard(v)
        self.nontree[i][v].discard(u)
        if not self.nontree[i][u]:
            self.forests[i].set_adj_mark(u, False)
        if not self.nontree[i][v]:
            self.forests[i].set_adj_mark(v, False)

    def delete_edge(self, u, v):
        self._check(u, v)
        e = self._key(u, v)
        if e not in self.level:
            raise MissingEdgeError((u, v))
        lvl, is_tree = self.level.pop(e)
        if not is_tree:
            self._remove_nontree(e, lvl)
            return
        for i in range(lvl + 1):
            self.forests[i].cut(u, v)
        for i in range(lvl, -1, -1):
            if self._replace(u, v, i):
                return

    def _replace(self, u, v, i):
        F = self.forests[i]
        small = u if F.tree_size(u) <= F.tree_size(v) else v
        # raise the small tree's level-i tree edges to level i+1
        if i + 1 < self.n_levels:
            up = self.forests[i + 1]
            for node in F.iter_marked(small, "tree_mark", "own_tree"):
                a, b = node.arc
                e = self._key(a, b)
                F.set_tree_mark(e[0], e[1], False)
                up.link(a, b)
                up.set_tree_mark(e[0], e[1], True)
                self.level[e] = (i + 1, True)
        for node in F.iter_marked(small, "adj_mark", "own_adj"):
            x = node.vertex
            while self.nontree[i][x]:
                y = next(iter(self.nontree[i][x]))
                e = self._key(x, y)
                self.replacement_scans += 1
                self._remove_nontree(e, i)
                if not F.connected(x, y):
                    # replacement found: a tree edge on levels 0..i
                    for j in range(i + 1):
                        self.forests[j].link(x, y)
                    F.set_tree_mark(e[0], e[1], True)
                    self.level[e] = (i, True)
                    return True
                if i + 1 < self.n_levels:
                    self._add_nontree(e, i + 1)
                else:
                    self._add_nontree(e, i)
                    return False
        return False

    def check_invariants(self):
        """Forest nesting and level bound; returns a list of problems."""
        problems = []
        L = self.n_levels
        for e, (lvl, is_tree) in self.level.items():
            if lvl >= L:
                problems.append(f"edge {e} at level {lvl} >= {L}")
            if is_tree:
                for i in range(lvl + 1):
                    if (e[0], e[1]) not in self.forests[i].arcs:
                        problems.append(f"tree edge {e} missing from forest {i}")
            elif not self.forests[lvl].connected(*e):
                problems.append(f"non-tree edge {e} spans two trees at level {lvl}")
        return problems
