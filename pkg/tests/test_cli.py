import json

import pytest

from knotworks import fixtures
from knotworks.cli import main


def fx(name):
    return str(fixtures.path(name))


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_detect_and(capsys):
    code, out, err = call(capsys, "detect", "--model", "and", "--input", fx("example2.json"))
    assert code == 1
    assert out["deadlocked"] is True
    assert set(out["deadlocked_set"]) == {"P1", "P2", "P3", "P4"}
    assert "deadlocked" in err


def test_detect_arcless(capsys):
    code, out, _ = call(capsys, "detect", "--model", "or", "--input", fx("arcless.json"))
    assert code == 0 and out["deadlocked"] is False


def test_detect_budget(capsys, tmp_path):
    w = {"format": "knotworks/1", "vertices": ["P1", "P2", "P3"],
         "arcs": [["P1", "P2"], ["P1", "P3"], ["P2", "P1"], ["P3", "P1"]],
         "conditions": {"P1": {"model": "andor", "subsets": [["P2"], ["P3"]]},
                        "P2": {"model": "andor", "subsets": [["P1"]]},
                        "P3": {"model": "andor", "subsets": [["P1"]]}}}
    f = tmp_path / "w.json"
    f.write_text(json.dumps(w))
    code, out, err = call(capsys, "detect", "--model", "andor", "--input", str(f),
                          "--witness", "search", "--budget", "0")
    assert code == 3 and out is None and "budget" in err
    code, out, _ = call(capsys, "detect", "--model", "andor", "--input", str(f), "--witness", "search")
    assert code == 1 and out["deadlocked_set"] == ["P1", "P2", "P3"]
    code, out, _ = call(capsys, "detect", "--model", "andor", "--input", str(f))
    assert code == 1


def test_ser(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = call(capsys, "ser", "simulate", "--graph", fx("c5.json"),
                        "--orientation", fx("c5_23.json"), "--trace", str(trace))
    assert code == 0 and (out["p"], out["m"], out["conc"]) == (5, 2, "2/5")
    assert len(trace.read_text().splitlines()) == 5
    code, out, _ = call(capsys, "ser", "concurrency", "--graph", fx("c5.json"),
                        "--orientation", fx("c5_23.json"))
    assert out["agree"] and out["conc"] == "2/5"
    code, out, _ = call(capsys, "ser", "optimize", "--graph", fx("c5.json"), "--exact")
    assert (out["conc"], out["chi_bar"]) == ("2/5", "5/2")
    code, out, _ = call(capsys, "ser", "coloring", "--graph", fx("c5.json"),
                        "--orientation", fx("c5_23.json"))
    assert out["proper"] and out["interleaved"] and (out["total"], out["per_vertex"]) == (5, 2)


def test_ser_heuristic_needs_seed(capsys):
    code, out, _ = call(capsys, "ser", "optimize", "--graph", fx("c5.json"))
    assert code == 2 and out is None
    a = call(capsys, "ser", "optimize", "--graph", fx("c5.json"), "--seed", "4")
    b = call(capsys, "ser", "optimize", "--graph", fx("c5.json"), "--seed", "4")
    assert a[0] == 0 and a[1] == b[1]


def test_smer(capsys):
    args = ["--graph", fx("edge23.json"), "--rates", fx("edge23_rates.json"), "--beads", fx("edge23_beads.json")]
    code, out, _ = call(capsys, "smer", "validate", *args)
    assert code == 0 and out["valid"]
    code, out, _ = call(capsys, "smer", "simulate", *args)
    assert out["period"] == 5 and out["op_counts"] == {"Pi": 3, "Pj": 2}
    code, out, _ = call(capsys, "smer", "ratios", *args)
    assert out["edges"][0]["ratio"] == "3/2" and out["edges"][0]["compliant"]
    tri = ["--graph", fx("triangle.json"), "--rates", fx("triangle_rates.json")]
    code, out, _ = call(capsys, "smer", "validate", *tri, "--beads", fx("triangle_sigma6.json"))
    assert code == 1 and not out["valid"] and out["max_sigma"] == 6
    code, out, _ = call(capsys, "smer", "simulate", *tri, "--beads", fx("triangle_sigma6.json"))
    assert code == 0 and out["first_cyclic_step"] is not None


def test_resources(capsys):
    code, out, _ = call(capsys, "resources", "build-g", "--system", fx("example1.json"))
    assert code == 0 and len(out["edges"]) == 6
    code, out, _ = call(capsys, "resources", "build-h", "--system", fx("example1.json"))
    assert len(out["edges"]) == 9
    code, out, _ = call(capsys, "resources", "color", "--system", fx("example1.json"), "--exact")
    assert out["num_colors"] == 3
    code, out, _ = call(capsys, "resources", "orient", "--system", fx("example1.json"),
                        "--coloring", fx("example1_h_coloring.json"))
    assert out["within_bound"] and out["longest_path"] <= 2 and out["mode"] == "supplied"


def test_asim(capsys, tmp_path):
    code, out, err = call(capsys, "asim", "run", "--scenario", fx("scenario_naive_example2.json"))
    assert code == 1 and set(out["witness"]) == {"P2", "P3", "P4"} and "deadlock" in err
    trace = tmp_path / "er.jsonl"
    code, out, _ = call(capsys, "asim", "run", "--scenario", fx("scenario_edge_reversal.json"),
                        "--max-events", "800", "--seed", "5", "--trace", str(trace))
    assert code == 0 and out["events"] == 800 and out["seed"] == 5
    assert json.loads(trace.read_text().splitlines()[0])["seed"] == 5


def test_input_errors(capsys, tmp_path):
    assert main(["detect", "--model", "and", "--input", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["resources", "build-g", "--system", str(bad)]) == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"format": "other/9", "vertices": [], "edges": []}))
    assert main(["ser", "simulate", "--graph", str(wrong)]) == 2
    assert main(["detect", "--model", "bogus", "--input", fx("example2.json")]) == 2
    assert main([]) == 2
    assert capsys.readouterr().out == ""


def test_exact_cap_exit_code(capsys, tmp_path):
    n = 8
    vs = [f"v{i}" for i in range(n)]
    k8 = tmp_path / "k8.json"
    k8.write_text(json.dumps({"format": "knotworks/1", "vertices": vs,
                              "edges": [[a, b] for i, a in enumerate(vs) for b in vs[i + 1:]]}))
    assert main(["ser", "optimize", "--graph", str(k8), "--exact"]) == 3
    assert capsys.readouterr().out == ""
