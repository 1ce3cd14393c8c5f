"""envelope-dnn command line: generate inputs, replay traces, benchmark."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import cutting, envelope, oracles, spanner
from .closest_pair import BruteBCP, DynamicBCP, pair_answers_match, with_queries
from .disk_graphs import DiskConnectivity, bfs_tree
from .geometry import Site, TOL
from .trace import NNReplay, WeightedOracle, read_jsonl, write_jsonl

STRUCTURES = ("nn", "bcp", "connectivity", "bfs", "spanner")
BENCH_COLUMNS = ["structure", "backend", "n", "param", "seed", "op", "count", "total_ns", "counters"]


def config_dict(args=None) -> dict:
    """Every tunable constant, echoed into reports."""
    cfg = {
        "c": cutting.C_SAMPLE,
        "eps_cutting": cutting.EPS,
        "retry_budget": cutting.RETRY_BUDGET,
        "audit_points": cutting.AUDIT_POINTS,
        "k0": envelope.K0,
        "alpha": envelope.ALPHA,
        "prune_c": envelope.PRUNE_C,
        "tol": TOL,
        "value_tol": oracles.VALUE_TOL,
        "cone_aperture": "eps/2",
        "spanner_cell_fraction": spanner.CELL_FRACTION,
        "numeric_mode": "float",
    }
    if args is not None:
        for key in ("seed", "backend", "structure", "psi", "eps", "exact"):
            if getattr(args, key, None) is not None:
                cfg[key] = getattr(args, key)
        if getattr(args, "exact", False):
            cfg["numeric_mode"] = "exact"
    return cfg


# ---------------------------------------------------------------- gen

def generate_sites(kind, n, psi, seed, side=1.0):
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        xy = rng.random((n, 2)) * side
    elif kind == "clustered":
        k = max(1, math.isqrt(max(n, 1)))
        centers = rng.random((k, 2)) * side
        xy = centers[rng.integers(k, size=n)] + rng.normal(scale=side / (4 * math.sqrt(k)), size=(n, 2))
    elif kind == "grid-line":
        # lattice rows: many collinear and cocircular sites on purpose
        m = max(1, math.ceil(math.sqrt(n)))
        i = np.arange(n)
        xy = np.column_stack([i % m, i // m]).astype(float) * (side / m)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    w = rng.uniform(1.0, psi, size=n) if psi > 1 else np.ones(n)
    return [{"id": int(i), "x": float(x), "y": float(y), "w": float(r)}
            for i, ((x, y), r) in enumerate(zip(xy, w))]


def cmd_gen(args):
    rows = generate_sites(args.kind, args.n, args.psi, args.seed, args.side)
    write_jsonl(args.out, rows)
    return 0


def cmd_trace(args):
    if args.structure == "nn":
        ops = oracles.nn_trace(args.seed, args.ops, weighted=args.psi > 1, psi=args.psi)
    elif args.structure == "bcp":
        ops = with_queries(oracles.bcp_trace(args.seed, args.ops))
    elif args.structure == "connectivity":
        ops = oracles.with_connected_queries(
            oracles.site_trace(args.seed, args.ops, args.psi, args.side), args.seed)
    else:
        raise ValueError(f"no trace generator for {args.structure!r}")
    write_jsonl(args.out, ops)
    return 0


# ---------------------------------------------------------------- run

def _sites(rows):
    return [Site(r["id"], r["x"], r["y"], r.get("w", 1.0)) for r in rows]


def _replay(structure, oracle, ops, verify, compare=oracles.answers_match):
    if verify:
        return oracles.run_differential(ops, structure, oracle, compare)
    t0 = time.perf_counter()
    answers = [a for a in (structure.apply(op) for op in ops) if a is not None]
    return {"ops": len(ops), "answers": len(answers), "mismatch_count": 0,
            "counters": structure.counters(), "wall_time_ms": (time.perf_counter() - t0) * 1e3}


def run_structure(structure, backend, rows, verify, psi=None, eps=0.5, root=None, seed=0,
                  edges_out=None):
    """Replay rows on one structure; returns the report body."""
    if structure == "nn":
        weighted = any("w" in op for op in rows if op["op"] == "insert")
        impl = NNReplay(backend, weighted=weighted)
        oracle = WeightedOracle() if weighted else oracles.BruteNNOracle()
        return _replay(impl, oracle, rows, verify)
    if structure == "bcp":
        return _replay(DynamicBCP(backend), BruteBCP(), rows, verify, pair_answers_match)
    if structure == "connectivity":
        if psi is None:
            psi = max([op.get("w", 1.0) for op in rows if op["op"] == "insert_site"], default=1.0)
        impl = DiskConnectivity(psi, backend=backend, seed=seed)
        report = _replay(impl, oracles.DiskConnectivityOracle(), rows, verify)
        if verify:
            report["audit_problems"] = len(impl.audit())
            report["mismatch_count"] += report["audit_problems"]
        return report
    sites = _sites(rows)
    if structure == "bfs":
        if root is None:
            root = sites[0].id
        t0 = time.perf_counter()
        parent, depth = bfs_tree(sites, root, backend)
        report = {"n": len(sites), "root": root, "reached": len(depth),
                  "max_depth": max(depth.values()), "wall_time_ms": (time.perf_counter() - t0) * 1e3,
                  "mismatch_count": 0}
        if verify:
            want = oracles.bfs_depths(sites, root)
            report["mismatch_count"] = sum(1 for k in set(want) | set(depth) if want.get(k) != depth.get(k))
        return report
    if structure == "spanner":
        t0 = time.perf_counter()
        h = spanner.build_spanner(sites, eps)
        report = {"n": len(sites), "eps": eps, "edges": len(h), "cones": h.k,
                  "wall_time_ms": (time.perf_counter() - t0) * 1e3, "mismatch_count": 0}
        if edges_out:
            write_jsonl(edges_out, [{"s": s, "t": t} for s, t in h.id_edges()])
        if verify:
            audit = spanner.spanner_audit(sites, h, np.random.default_rng(seed))
            report["max_sampled_stretch"] = audit["max_stretch"]
            report["non_edges"] = audit["non_edges"]
            bad = audit["non_edges"] > 0 or audit["max_stretch"] > 1 + eps + 1e-6
            report["mismatch_count"] = int(bad)
        return report
    raise ValueError(f"unknown structure {structure!r}")


def cmd_run(args):
    rows = read_jsonl(args.trace)
    report = run_structure(args.structure, args.backend, rows, args.verify, psi=args.psi,
                           eps=args.eps, root=args.root, seed=args.seed, edges_out=args.edges_out)
    report["config"] = config_dict(args)
    text = json.dumps(report, indent=2, default=str)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 1 if report.get("mismatch_count", 0) else 0


# ---------------------------------------------------------------- bench

class _Timed:
    """Wraps apply() and accumulates per-op counts and nanoseconds."""

    def __init__(self, impl):
        self.impl = impl
        self.count = {}
        self.ns = {}

    def apply(self, op):
        t0 = time.perf_counter_ns()
        out = self.impl.apply(op)
        dt = time.perf_counter_ns() - t0
        kind = op["op"]
        self.count[kind] = self.count.get(kind, 0) + 1
        self.ns[kind] = self.ns.get(kind, 0) + dt
        return out


def scan_telemetry(n, seed, n_queries=1000):
    """Per-query conflict-scan work of the plane structure after n insertions."""
    rng = np.random.default_rng(seed)
    impl = envelope.ChanEnvelope(seed=seed)
    t0 = time.perf_counter_ns()
    for i, (x, y) in enumerate(rng.random((n, 2))):
        impl.insert_site(i, float(x), float(y))
    t1 = time.perf_counter_ns()
    before = impl.stats["scanned"]
    for x, y in rng.random((n_queries, 2)):
        impl.query(float(x), float(y))
    t2 = time.perf_counter_ns()
    c = impl.counters()
    scan = (c["scanned"] - before) / n_queries
    bound = (math.floor(math.log2(n)) + 3) * envelope.ALPHA * envelope.K0
    return {"n": n, "seed": seed, "insert_ns": t1 - t0, "query_ns": t2 - t1, "queries": n_queries,
            "scan_per_query": scan, "max_scanned": c["max_scanned"], "bound": bound,
            "length": c["length"]}


def _bench_one(job):
    structure, backend, n, seed = job
    if structure == "scan":
        row = scan_telemetry(n, seed)
        counters = json.dumps({k: row[k] for k in ("scan_per_query", "max_scanned", "bound", "length")},
                              sort_keys=True)
        return [[structure, "chan", n, "", seed, "insert", n, row["insert_ns"], counters],
                [structure, "chan", n, "", seed, "query", row["queries"], row["query_ns"], counters]]
    if structure == "nn":
        ops = oracles.nn_trace(seed, 2 * n, p_insert=0.5, p_delete=0.0, warmup=n)
        impl = NNReplay(backend)
        param = ""
    elif structure == "bcp":
        ops = with_queries(oracles.bcp_trace(seed, n))
        impl = DynamicBCP(backend)
        param = ""
    elif structure == "connectivity":
        psi = 2.0
        ops = oracles.with_connected_queries(
            oracles.site_trace(seed, n, psi, 1.3 * math.sqrt(n)), seed)
        impl = DiskConnectivity(psi, backend="brute", seed=seed)
        param = f"psi={psi}"
    else:
        raise ValueError(f"no bench for {structure!r}")
    timed = _Timed(impl)
    for op in ops:
        timed.apply(op)
    counters = json.dumps(impl.counters(), sort_keys=True, default=str)
    return [[structure, backend, n, param, seed, kind, timed.count[kind], timed.ns[kind], counters]
            for kind in timed.count]


def bench_rows(suite, sizes, seeds, backends=("chan",)):
    jobs = [(s, b, n, seed) for s in suite for b in backends for n in sizes for seed in seeds]
    workers = int(os.environ.get("ENVELOPE_DNN_THREADS", "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_bench_one, jobs))
    else:
        parts = [_bench_one(j) for j in jobs]
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: tuple(str(v) if i in (0, 1, 3, 5) else v for i, v in enumerate(r[:6])))
    return rows


def cmd_bench(args):
    suite = [s for s in args.suite.split(",") if s] if args.suite else []
    sizes = [int(v) for v in args.sizes.split(",") if v] if args.sizes else []
    seeds = [int(v) for v in args.seeds.split(",") if v] if args.seeds else [0]
    backends = args.backend.split(",")
    rows = bench_rows(suite, sizes, seeds, backends)
    out = open(args.csv_out, "w", newline="") if args.csv_out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(BENCH_COLUMNS)
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_config(args):
    print(json.dumps(config_dict(), indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="envelope-dnn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a site JSONL file")
    g.add_argument("--kind", choices=["uniform", "clustered", "grid-line"], default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--psi", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--side", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("trace", help="write a seeded operation trace")
    t.add_argument("--structure", choices=["nn", "bcp", "connectivity"], required=True)
    t.add_argument("--ops", type=int, required=True)
    t.add_argument("--psi", type=float, default=1.0)
    t.add_argument("--side", type=float, default=20.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_trace)

    r = sub.add_parser("run", help="replay a trace or site file")
    r.add_argument("--structure", choices=STRUCTURES, required=True)
    r.add_argument("--backend", choices=["brute", "chan"], default="chan")
    r.add_argument("--trace", required=True)
    r.add_argument("--verify", action="store_true")
    r.add_argument("--report")
    r.add_argument("--psi", type=float)
    r.add_argument("--eps", type=float, default=0.5)
    r.add_argument("--root", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--edges-out")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="per-op timing CSV")
    b.add_argument("--suite", default="")
    b.add_argument("--sizes", default="")
    b.add_argument("--seeds", default="0")
    b.add_argument("--backend", default="chan")
    b.add_argument("--csv-out")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("config", help="print the default constants")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
