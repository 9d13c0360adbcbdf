"""CLI behavior: subcommands, exit codes, and file outputs."""

import json
from fractions import Fraction

import pytest

from nnidist import newick
from nnidist.cli import main
from nnidist.gen import generate_pair


@pytest.fixture
def pair_files(tmp_path):
    t1, t2, cost = generate_pair(seed=4, n=10, moves=12)
    p1 = tmp_path / "a.nwk"
    p2 = tmp_path / "b.nwk"
    newick.write_tree(p1, t1)
    newick.write_tree(p2, t2)
    return str(p1), str(p2), cost


def test_approx_writes_a_verifiable_trace(pair_files, tmp_path, capsys):
    p1, p2, _ = pair_files
    trace = str(tmp_path / "trace.jsonl")
    assert main(["approx", p1, p2, "--trace", trace]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert Fraction(summary["cost"]) >= 0
    assert main(["verify", p1, trace, p2]) == 0


def test_approx_metrics_report(pair_files, tmp_path):
    p1, p2, _ = pair_files
    report = tmp_path / "metrics.json"
    assert main(["approx", p1, p2, "--report-metrics", str(report)]) == 0
    metrics = json.loads(report.read_text())
    assert metrics
    for phase in metrics.values():
        assert {"rounds", "work", "peak_parallelism"} <= set(phase)


def test_approx_traces_match_across_thread_counts(pair_files, tmp_path):
    p1, p2, _ = pair_files
    blobs = []
    for threads in ("1", "8"):
        trace = tmp_path / f"t{threads}.jsonl"
        assert main(["approx", p1, p2, "--threads", threads,
                     "--trace", str(trace)]) == 0
        blobs.append(trace.read_bytes())
    assert blobs[0] == blobs[1]


def test_exact_prints_distance_and_witness(tmp_path, capsys):
    t1, t2, cost = generate_pair(seed=1, n=4, moves=1)
    p1 = tmp_path / "a.nwk"
    p2 = tmp_path / "b.nwk"
    newick.write_tree(p1, t1)
    newick.write_tree(p2, t2)
    assert main(["exact", str(p1), str(p2)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    distance = Fraction(json.loads(lines[0])["distance"])
    assert distance <= cost
    header = json.loads(lines[1])
    assert header["kind"] == "nni-trace"
    assert len(lines) == 2 + header["ops"]


def test_exact_state_limit_failure_exits_one(pair_files, capsys):
    p1, p2, _ = pair_files
    assert main(["exact", p1, p2, "--state-limit", "1"]) == 1
    assert "state" in capsys.readouterr().err


def test_verify_rejects_a_wrong_target(pair_files, tmp_path, capsys):
    p1, p2, _ = pair_files
    trace = str(tmp_path / "trace.jsonl")
    assert main(["approx", p1, p2, "--trace", trace]) == 0
    capsys.readouterr()
    assert main(["verify", p1, trace, p1]) == 1
    assert "failed" in capsys.readouterr().err


def test_gep_reports_pairs_and_components(tmp_path, capsys):
    t1, _, _ = generate_pair(seed=2, n=8, moves=0)
    p1 = tmp_path / "a.nwk"
    newick.write_tree(p1, t1)
    assert main(["gep", str(p1), str(p1)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["pairs"]) == len(t1.internal_edges())
    assert len(payload["components"]) == len(payload["pairs"]) + 1
    for pair in payload["pairs"]:
        assert pair["t1_edge"] == pair["t2_edge"]


def test_gen_then_exact_respects_move_budget(tmp_path, capsys):
    out1 = str(tmp_path / "x.nwk")
    out2 = str(tmp_path / "y.nwk")
    assert main(["gen", "--taxa", "4", "--seed", "6", "--moves", "1",
                 "--out1", out1, "--out2", out2]) == 0
    budget = Fraction(json.loads(capsys.readouterr().out)["cost_upper_bound"])
    assert main(["exact", out1, out2]) == 0
    first = capsys.readouterr().out.strip().splitlines()[0]
    assert Fraction(json.loads(first)["distance"]) <= budget


def test_unreadable_input_is_a_usage_error(tmp_path, capsys):
    missing = str(tmp_path / "nope.nwk")
    assert main(["gep", missing, missing]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_tree_is_a_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.nwk"
    bad.write_text("((a:1,b:2)")
    assert main(["gep", str(bad), str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_infeasible_pair_exits_one(tmp_path, capsys):
    a = tmp_path / "a.nwk"
    b = tmp_path / "b.nwk"
    a.write_text("((x:1,y:1):3,(z:1,w:1):3);\n")
    b.write_text("((x:1,y:1):3,(z:1,w:1):5);\n")
    assert main(["approx", str(a), str(b)]) == 1
    assert "infinite" in capsys.readouterr().err


def test_usage_error_exit_code_from_argparse():
    with pytest.raises(SystemExit) as err:
        main(["approx", "only-one-file"])
    assert err.value.code == 2
