import json

import pytest

from pathlearn.cli import main
from pathlearn.model_io import load_network


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_then_learn_oracle(tmp_path, capsys):
    net = tmp_path / "g.json"
    assert run(["gen", "--n", 7, "--seed", 2, "-o", net], capsys)[0] == 0
    report = tmp_path / "r.json"
    code, out, _ = run(["learn", net, "--oracle", "--report", report], capsys)
    assert code == 0 and out.startswith("digraph")
    assert json.loads(report.read_text())["metrics"]["f1"] == 1.0


def test_learn_bundled_discrete(tmp_path, capsys):
    report, edges = tmp_path / "r.json", tmp_path / "e.txt"
    code, _, _ = run(["learn", "cancer", "--seed", 1, "--report", report, "--edges", edges], capsys)
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["metrics"]["f1"] == 1.0
    assert edges.read_text().startswith("n 5\n")


def test_learn_asgn(tmp_path, capsys):
    net = tmp_path / "a.json"
    run(["gen", "--kind", "asgn", "--n", 6, "--seed", 4, "-o", net], capsys)
    code, out, _ = run(["learn", net, "--reduction-only", "--seed", 1], capsys)
    assert code == 0 and out.startswith("digraph")


def test_query(capsys):
    code, out, _ = run(["query", "asia", 0, 1, "--m", 5000, "--gamma", 0.05], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["answer"] in (0, 1) and doc["samples_used"] == 10_000


def test_census(capsys):
    code, out, _ = run(["census", "asia", "child"], capsys)
    assert code == 0
    assert "child,20,25,1,4.00%," in out


def test_phase_json_config(tmp_path, capsys):
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"regime": "continuous", "n_values": [5], "C_grid": [0, 8], "trials": 3}))
    csv_path, svg = tmp_path / "p.csv", tmp_path / "p.svg"
    assert run(["phase", cfg, "-o", csv_path, "--svg", svg], capsys)[0] == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,C,m,trials,successes,frequency" and len(lines) == 3
    assert svg.read_text().startswith("<svg")


def test_phase_toml_config(tmp_path, capsys):
    cfg = tmp_path / "p.toml"
    cfg.write_text('regime = "continuous"\nn_values = [4]\nC_grid = [6]\ntrials = 2\n')
    code, out, _ = run(["phase", cfg], capsys)
    assert code == 0 and out.splitlines()[1].startswith("4,6.0,")


def test_convert_round_trip(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["convert", "cancer", "--to", "json", "-o", out], capsys)[0] == 0
    assert load_network(out).payload == load_network("cancer").payload
    code, dot, _ = run(["convert", out, "--to", "dot"], capsys)
    assert code == 0 and dot.count("->") == 4


def test_exit_codes(tmp_path, capsys):
    assert run(["learn", tmp_path / "missing.bif"], capsys)[0] == 3
    bad = tmp_path / "bad.bif"
    bad.write_text("variable A { type discrete [ 2 ] { x, y } }")
    code, _, err = run(["convert", bad, "--to", "json"], capsys)
    assert code == 1 and "line 1" in err
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"regime": "nope"}))
    assert run(["phase", cfg], capsys)[0] == 1


def test_capacity_exit_code(tmp_path, capsys):
    # ten binary parents; sweeping S of size 9 with i needs 2^9 * 2 = 1024 interventions
    names = [f"P{k}" for k in range(10)]
    parts = [f"variable {v} {{ type discrete [ 2 ] {{ a, b }}; }}" for v in names + ["C"]]
    parts += [f"probability ( {v} ) {{ table 0.5, 0.5; }}" for v in names]
    parts.append(f"probability ( C | {', '.join(names)} ) {{ default 0.3, 0.7; }}")
    path = tmp_path / "wide.bif"
    path.write_text("\n".join(parts))
    code, _, err = run(["query", path, 0, 10, "--m", 10, "--gamma", 0.1, "--S",
                        ",".join(str(k) for k in range(1, 10))], capsys)
    assert code == 0
    code, _, err = run(["query", path, 0, 10, "--m", 10, "--gamma", 0.1, "--cap", 1000, "--S",
                        ",".join(str(k) for k in range(1, 10))], capsys)
    assert code == 2 and "capacity" in err


def test_seed_from_environment(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("PATHLEARN_SEED", "11")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["gen", "--n", 6, "-o", a], capsys)
    run(["gen", "--n", 6, "--seed", 11, "-o", b], capsys)
    assert a.read_text() == b.read_text()
    monkeypatch.setenv("PATHLEARN_SEED", "x")
    assert run(["gen", "--n", 6], capsys)[0] == 1


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
