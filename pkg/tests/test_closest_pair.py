import pytest

from envelope_dnn.closest_pair import BruteBCP, DynamicBCP, pair_answers_match, with_queries
from envelope_dnn.envelope import DuplicateIdError, UnknownIdError
from envelope_dnn.oracles import bcp_trace, run_differential


def test_examples():
    s = DynamicBCP()
    s.insert(0, 0, 0, "red")
    s.insert(1, 3, 4, "blue")
    assert s.current() == (0, 1, 5.0)
    s.delete(1)
    assert s.current() is None


def test_id_errors():
    s = DynamicBCP()
    s.insert(0, 0, 0, "red")
    with pytest.raises(DuplicateIdError):
        s.insert(0, 1, 1, "blue")
    with pytest.raises(UnknownIdError):
        s.delete(5)
    with pytest.raises(ValueError):
        s.insert(2, 0, 0, "green")


@pytest.mark.parametrize("backend", ["brute", "chan"])
def test_trace_matches_quadratic_oracle(backend):
    r = run_differential(with_queries(bcp_trace(1, 800)), DynamicBCP(backend), BruteBCP(),
                         compare=pair_answers_match)
    assert r["mismatch_count"] == 0


def test_weighted_variant():
    ops = with_queries(bcp_trace(2, 400))
    for i, op in enumerate(ops):
        if op["op"] == "insert":
            op["w"] = (i % 7) * 0.01
    r = run_differential(ops, DynamicBCP("brute", weighted=True), BruteBCP(weighted=True),
                         compare=pair_answers_match)
    assert r["mismatch_count"] == 0


def test_queries_per_update_stay_small():
    s = DynamicBCP("brute")
    for op in bcp_trace(3, 2000):
        s.apply(op)
    c = s.counters()
    assert c["nn_queries"] / c["updates"] < 4
