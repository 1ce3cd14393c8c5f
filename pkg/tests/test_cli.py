import csv
import json

import pytest

from envelope_dnn.cli import bench_rows, generate_sites, main
from envelope_dnn.disk_graphs import bfs_tree


def test_gen_empty_and_deterministic(tmp_path):
    a, b, z = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "z.jsonl"
    assert main(["gen", "--n", "0", "--out", str(z)]) == 0
    assert z.read_text() == ""
    for p in (a, b):
        main(["gen", "--kind", "clustered", "--n", "50", "--psi", "3", "--seed", "4", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("kind", ["uniform", "clustered", "grid-line"])
def test_gen_weights_in_range(kind):
    rows = generate_sites(kind, 200, 2.5, 1)
    assert len(rows) == 200
    assert all(1.0 <= r["w"] <= 2.5 for r in rows)


def _run(tmp_path, structure, backend, trace, *extra):
    rep = tmp_path / f"{structure}-{backend}.json"
    code = main(["run", "--structure", structure, "--backend", backend, "--trace", str(trace),
                 "--verify", "--report", str(rep), *extra])
    return code, json.loads(rep.read_text())


@pytest.mark.parametrize("structure", ["nn", "bcp"])
def test_run_verify_and_cross_backend(tmp_path, structure):
    tr = tmp_path / "t.jsonl"
    main(["trace", "--structure", structure, "--ops", "300", "--seed", "2", "--out", str(tr)])
    code_b, brute = _run(tmp_path, structure, "brute", tr)
    code_c, chan = _run(tmp_path, structure, "chan", tr)
    assert code_b == code_c == 0
    assert brute["mismatch_count"] == chan["mismatch_count"] == 0
    assert chan["config"]["k0"] == 8 and chan["config"]["backend"] == "chan"


def test_run_connectivity_bfs_spanner(tmp_path):
    tr = tmp_path / "c.jsonl"
    main(["trace", "--structure", "connectivity", "--ops", "200", "--psi", "2", "--side", "20",
          "--out", str(tr)])
    assert _run(tmp_path, "connectivity", "brute", tr)[0] == 0
    sites = tmp_path / "s.jsonl"
    main(["gen", "--n", "200", "--psi", "2", "--side", "15", "--out", str(sites)])
    assert _run(tmp_path, "bfs", "brute", sites)[0] == 0
    edges = tmp_path / "e.jsonl"
    code, rep = _run(tmp_path, "spanner", "brute", sites, "--edges-out", str(edges))
    assert code == 0 and rep["max_sampled_stretch"] <= 1.5 + 1e-6
    assert len(edges.read_text().splitlines()) == rep["edges"]


def test_run_exit_code_on_mismatch(tmp_path, monkeypatch):
    from envelope_dnn import cli

    sites = tmp_path / "s.jsonl"
    main(["gen", "--n", "100", "--side", "8", "--out", str(sites)])

    def off_by_one(sites, root, backend="brute"):
        parent, depth = bfs_tree(sites, root, backend)
        return parent, {k: d + (k != root) for k, d in depth.items()}

    monkeypatch.setattr(cli, "bfs_tree", off_by_one)
    code, rep = _run(tmp_path, "bfs", "brute", sites)
    assert code == 1 and rep["mismatch_count"] > 0


def test_bench_empty_suite_is_header_only(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--csv-out", str(out)]) == 0
    assert out.read_text().strip() == "structure,backend,n,param,seed,op,count,total_ns,counters"


def test_bench_rows_sorted_and_counters_match_run():
    rows = bench_rows(["bcp"], [120, 60], [0])
    keys = [(r[0], r[1], r[2], r[3], r[4], r[5]) for r in rows]
    assert keys == sorted(keys)
    assert {r[5] for r in rows} == {"insert", "delete", "current_pair"}
    again = bench_rows(["bcp"], [60, 120], [0])
    assert [r[8] for r in rows] == [r[8] for r in again]


def test_config_prints(capsys):
    assert main(["config"]) == 0
    assert json.loads(capsys.readouterr().out)["retry_budget"] == 16
