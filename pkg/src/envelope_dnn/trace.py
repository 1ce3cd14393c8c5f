"""JSONL operation traces and their replay against the dynamic structures."""
from __future__ import annotations

import json
import math
from fractions import Fraction

from .envelope import BruteNN, ChanEnvelope
from .geometry import ConeSurface, Point2, Surface, lift_euclidean


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":"), default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


class NNReplay:
    """Applies nearest-neighbour trace ops to a backend.

    Sites carry an optional weight w.  The plane backend answers for the
    lifted planes of unweighted sites, so query values are |q-p|^2 - |q|^2.
    With weights every site becomes a cone |q-p| + w and the brute backend
    is used.
    """

    def __init__(self, backend="chan", weighted=False, exact=False, **kw):
        self.weighted = weighted
        self.exact = exact
        if backend == "chan" and not weighted:
            self.impl = ChanEnvelope(exact=exact, **kw)
        elif backend in ("brute", "chan"):
            self.impl = BruteNN()
        else:
            raise ValueError(f"unknown backend {backend!r}")

    def apply(self, op):
        kind = op["op"]
        if kind == "insert":
            sid, x, y = op["id"], op["x"], op["y"]
            if self.weighted:
                self.impl.insert(Surface(sid, ConeSurface(Point2(x, y), op.get("w", 0.0))))
            elif isinstance(self.impl, ChanEnvelope):
                self.impl.insert_site(sid, x, y)
            else:
                self.impl.insert(Surface(sid, lift_euclidean(Point2(x, y))))
            return None
        if kind == "delete":
            self.impl.delete(op["id"])
            return None
        if kind == "query":
            res = self.impl.query(op["x"], op["y"])
            if res is None:
                return {"id": None}
            if self.exact and not isinstance(res[1], Fraction):
                return {"id": res[0], "value": Fraction(res[1])}
            return {"id": res[0], "value": res[1]}
        raise ValueError(f"unknown op {kind!r}")

    def counters(self):
        return self.impl.counters()


def replay(ops, backend="chan", weighted=False, exact=False, **kw):
    """Run ops and return {"answers": [...], "counters": {...}}."""
    r = NNReplay(backend, weighted, exact, **kw)
    answers = []
    for op in ops:
        a = r.apply(op)
        if a is not None:
            answers.append(a)
    return {"answers": answers, "counters": r.counters()}


class WeightedOracle:
    """Reference for weighted traces: lowest |q-p| + w by linear scan."""

    def __init__(self):
        self.sites = {}

    def apply(self, op):
        kind = op["op"]
        if kind == "insert":
            self.sites[op["id"]] = (op["x"], op["y"], op.get("w", 0.0))
        elif kind == "delete":
            del self.sites[op["id"]]
        elif kind == "query":
            best = None
            for sid, (x, y, w) in self.sites.items():
                v = math.sqrt((x - op["x"]) ** 2 + (y - op["y"]) ** 2) + w
                if best is None or v < best[1] - 1e-9 or (abs(v - best[1]) <= 1e-9 and sid < best[0]):
                    best = (sid, v)
            return {"id": None} if best is None else {"id": best[0], "value": best[1]}
        return None
