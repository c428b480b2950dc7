import json

import pytest
from hypothesis import given, strategies as st

from treasure_hunt import cli, verify
from treasure_hunt.cli import CSV_COLUMNS, ExperimentConfig, main

texts = st.text(st.characters(blacklist_categories=["Cs"]), max_size=12)


@given(
    texts, texts, texts, st.none() | texts, st.sampled_from(["hunt", "bfs"]),
    st.integers(0, 2**31), st.integers(1, 5), st.none() | texts, st.none() | texts,
)
def test_config_roundtrip(graph, treasure, model, x, algo, seed, reps, trace, report):
    cfg = ExperimentConfig(graph, treasure, model, x, algo, seed, reps, trace, report)
    text = cfg.dumps()
    assert ExperimentConfig.loads(text) == cfg
    assert ExperimentConfig.loads(text).dumps() == text


def test_config_rejects_unknown_keys():
    with pytest.raises(cli.UsageError):
        ExperimentConfig.loads('{"graph": "line", "colour": 1}')


def test_run_writes_report_and_trace(tmp_path):
    rep, tr = tmp_path / "r.json", tmp_path / "t.jsonl"
    code = main(["run", "--graph", "line", "--treasure", "dist:10", "--x", "1", "--report", str(rep), "--trace", str(tr)])
    assert code == 0
    doc = json.loads(rep.read_text())
    assert doc["total_cost"] == 236 and doc["d"] == 10 and doc["e_d"] == 20
    assert doc["ratio"] > 0 and "wall_time" not in doc
    assert sum(ph["cost"] for ph in doc["phases"]) == doc["total_cost"]
    lines = tr.read_text().splitlines()
    assert len(lines) == 236
    assert set(json.loads(lines[0])) == {"step", "from", "portOut", "to", "portIn", "skDepth", "fuel", "context"}


def test_run_treasure_at_source(capsys):
    assert main(["run", "--treasure", "dist:0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["total_cost"] == 0 and doc["ratio"] is None


def test_run_restricted(tmp_path):
    rep = tmp_path / "r.json"
    code = main(["run", "--graph", "random:n=40,edges=60,seed=2", "--treasure", "dist:3", "--model", "fuel:1", "--report", str(rep)])
    assert code == 0
    doc = json.loads(rep.read_text())
    assert doc["audit"]["fuelBoundOK"] and doc["x"] == "1/2" and doc["model"] == "fuel:1"


def test_run_from_config_file(tmp_path):
    cfg = ExperimentConfig(graph="grid", treasure="dist:3", report=str(tmp_path / "r.json"))
    path = tmp_path / "c.json"
    path.write_text(cfg.dumps())
    assert main(["run", "--config", str(path)]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["config"]["graph"] == "grid"


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--graph", "lne"],
        ["run", "--treasure", "dist:5,pick=any"],
        ["run", "--model", "rope:0"],
        ["run", "--model", "rope:1", "--x", "3"],
        ["run", "--x", "-1"],
        ["run", "--algo", "bfs", "--model", "fuel:1"],
        ["bench", "--d", "1,x"],
        ["verify", "nosuch"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bench_csv(tmp_path, capsys):
    assert main(["bench", "--d", "10,100"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "10,20,236,3.291527,unrestricted"
    assert len(lines) == 3


def test_bench_empty_sweep_is_header_only(capsys):
    assert main(["bench", "--d", ""]) == 0
    assert capsys.readouterr().out == ",".join(CSV_COLUMNS) + "\n"


def test_bench_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["bench", "--graph", "grid", "--d", "1,2,3", "--seed", "4", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bench_baseline_rows(capsys):
    assert main(["bench", "--d", "100", "--algo", "bfs", "--pick", "max"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[-1] == "bfs" and int(row[2]) > 100**2 / 2


def test_adversary_command(tmp_path):
    rep = tmp_path / "a.json"
    assert main(["adversary", "--d", "3", "--m", "5", "--x", "10", "--algo", "huntx:1", "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["ok"] and doc["forced_cost"] >= doc["bound"]


def test_verify_passes(capsys):
    assert main(["verify", "lower-bound"]) == 0
    assert "lower-bound: PASS" in capsys.readouterr().out


def test_verify_fails_on_broken_cdfs(monkeypatch, capsys):
    real = verify.cdfs

    def no_debit(state, l, b):
        # pretend the budget was never spent
        n, tree = real(state, l, b)
        return b, tree

    monkeypatch.setattr(verify, "cdfs", no_debit)
    assert main(["verify", "cdfs"]) == 1
    assert "cdfs: FAIL" in capsys.readouterr().out


def test_repetitions_rerun(tmp_path):
    rep = tmp_path / "r.json"
    assert main(["run", "--treasure", "dist:7", "--repetitions", "3", "--report", str(rep)]) == 0
