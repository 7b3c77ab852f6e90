import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pseudocomp import cli, sim
from pseudocomp.bounds import committee_potential
from pseudocomp.errors import ParseError
from pseudocomp.estimation import OpinionMatrix
from pseudocomp.rules import AdaptiveConfig, adaptive_aggregate, block_aggregate


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_decisions(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


@pytest.fixture
def opinions(tmp_path):
    path = tmp_path / "op.csv"
    assert run("generate", "0.5:0.9:10", "--trials", 3000, "--seed", 12, "--out", path) == 0
    return path


def test_generated_file_matches_library(opinions):
    tasks, m = cli.read_opinions(opinions)
    ref = sim.generate(np.linspace(0.5, 0.9, 10), 3000, seed=12)
    assert tasks == [str(k) for k in range(1, 3001)]
    assert np.array_equal(m.x, ref.x) and np.array_equal(m.labels, ref.labels)
    assert opinions.read_text().splitlines()[0] == "task," + ",".join(
        f"expert_{k}" for k in range(1, 11)
    ) + ",label"


def test_unanimous_majority(tmp_path):
    src = tmp_path / "u.csv"
    src.write_text("task,expert_1,expert_2,expert_3\na,1,1,1\nb,-1,-1,-1\nc,1,1,1\n")
    out = tmp_path / "d.csv"
    assert run("aggregate", src, "--mode", "mv", "--out", out) == 0
    header, rows = read_decisions(out)
    assert header == ["task", "decision"]
    assert rows == [["a", "1"], ["b", "-1"], ["c", "1"]]


@pytest.mark.parametrize("mode", ["block-log", "block-linear"])
def test_block_modes_equal_library(opinions, tmp_path, mode):
    out = tmp_path / "d.csv"
    assert run("aggregate", opinions, "--mode", mode, "--seed", 5, "--out", out) == 0
    _, m = cli.read_opinions(opinions)
    expected = block_aggregate(m, mode.split("-")[1], "fair", seed=5)
    _, rows = read_decisions(out)
    assert [int(r[1]) for r in rows] == expected.tolist()


def test_adaptive_mode_reports_freeze(tmp_path):
    src = tmp_path / "strong.csv"
    cli.write_opinions(src, sim.generate([0.8] * 15, 400, seed=3))
    out = tmp_path / "d.csv"
    assert run("aggregate", src, "--mode", "adaptive", "--delta", 0.1, "--seed", 2, "--out", out) == 0
    header, rows = read_decisions(out)
    assert header == ["task", "decision", "frozen", "phi_tilde"]
    _, m = cli.read_opinions(src)
    ref = adaptive_aggregate(m, AdaptiveConfig(0.1), seed=2)
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert meta["config"]["freeze_time"] == ref.freeze_time is not None
    assert [int(r[1]) for r in rows] == ref.decisions.tolist()
    assert [r[2] for r in rows] == [str(int(f)) for f in ref.frozen]
    trace = [float(r[3]) for r in rows if r[3]]
    assert trace == ref.phi_trace.tolist()


def test_round_trip_decisions(opinions, tmp_path):
    out = tmp_path / "d.csv"
    assert run("aggregate", opinions, "--mode", "block-log", "--out", out) == 0
    _, rows = read_decisions(out)
    assert len(rows) == 3000
    assert {r[1] for r in rows} <= {"1", "-1"}


def test_metadata_records_config(opinions, tmp_path):
    out = tmp_path / "d.csv"
    run("aggregate", opinions, "--mode", "mv", "--tie", "pos", "--seed", 9, "--out", out)
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())["config"]
    assert meta["mode"] == "mv" and meta["tie"] == "pos" and meta["seed"] == 9
    assert meta["n_tasks"] == 3000 and meta["n_experts"] == 10


@pytest.mark.parametrize(
    "body, line, column",
    [
        ("task,expert_1,expert_2\n1,1,2\n", 2, 3),
        ("task,expert_1,expert_3\n1,1,1\n", 1, 3),
        ("id,expert_1\n1,1\n", 1, 1),
        ("task,expert_1,expert_2\n1,1,1\n2,1\n", 3, None),
        ("task,expert_1,expert_2,label\n1,1,1,0\n", 2, 4),
    ],
)
def test_parse_errors_locate_the_cell(tmp_path, body, line, column):
    src = tmp_path / "bad.csv"
    src.write_text(body)
    with pytest.raises(ParseError) as info:
        cli.read_opinions(src)
    assert info.value.line == line and info.value.column == column


def test_bad_input_exits_with_two(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("task,expert_1,expert_2\n1,1,2\n")
    assert run("aggregate", src, "--mode", "mv") == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column 3" in err


def test_pseudo_modes_need_two_experts(tmp_path):
    src = tmp_path / "one.csv"
    src.write_text("task,expert_1\n1,1\n")
    assert run("aggregate", src, "--mode", "block-log") == 2
    assert run("aggregate", src, "--mode", "mv", "--out", tmp_path / "d.csv") == 0


# --- analyze ---------------------------------------------------------------


def analyze(tmp_path, *args):
    out = tmp_path / "r.json"
    assert run("analyze", *args, "--out", out) == 0
    return json.loads(out.read_text())


def test_analyze_homogeneous(tmp_path):
    r = analyze(tmp_path, "0.6,0.6,0.6", "--delta", 0.1, "--epsilon", 0.05, "--trials", 10_000)
    assert r["phi"] == pytest.approx(0.121640, abs=1e-6)
    assert r["phi"] == committee_potential([0.6] * 3)
    assert r["p_peer"] == pytest.approx([0.6] * 3)
    assert set(r["checks"]) >= {"consistency", "weight_deviation", "block_error_bound"}
    assert r["meta"]["config"]["committee"] == "0.6,0.6,0.6"


def test_analyze_coin_flippers_are_vacuous(tmp_path):
    r = analyze(tmp_path, "0.5,0.5")
    assert r["phi"] == 0.0 and r["phi_tilde"] == 0.0
    assert set(r["vacuous"]) == {"improved_upper", "ks_upper", "pnb_upper"}


def test_analyze_perfect_expert(tmp_path):
    r = analyze(tmp_path, "1.0,0.6,0.7")
    assert r["improved_upper"] == 0.0
    assert r["phi"] == "inf"


def test_analyze_with_rate_and_balance(tmp_path):
    # the inferred balance level sits on the open boundary, so no condition checks run
    r = analyze(tmp_path, "0.5:0.9:7", "--horizon", 15, "--delta", 0.5, "--epsilon", 1.0)
    assert 0.5 < r["a_n"] < 1
    assert r["gamma"] == pytest.approx(0.1)
    assert "corollary" not in r["checks"]
    r = analyze(tmp_path, "0.5:0.9:7", "--gamma", 0.05, "--delta", 0.5, "--epsilon", 1.0)
    assert "corollary" in r["checks"] and "deviation_condition" in r["checks"]


def test_analyze_committee_file(tmp_path):
    spec = tmp_path / "c.txt"
    spec.write_text("0.6\n0.7\n0.8\n")
    r = analyze(tmp_path, f"@{spec}")
    assert r["p"] == [0.6, 0.7, 0.8]


def test_analyze_domain_error(tmp_path, capsys):
    assert run("analyze", "0.4,1.5") == 2
    assert "DomainError" in capsys.readouterr().err


# --- reproduce -------------------------------------------------------------


def test_reproduce_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("reproduce", "pseudo_vs_true", "--seed", 7, "--tasks", 20_000, "--out", a) == 0
    assert run("reproduce", "pseudo_vs_true", "--seed", 7, "--tasks", 20_000, "--out", b) == 0
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert files and files == sorted(p.relative_to(b) for p in b.rglob("*.csv"))
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_reproduce_bound_comparison(tmp_path):
    out = tmp_path / "r"
    assert run("reproduce", "bound_comparison", "--sizes", 10, 12, "--out", out) == 0
    table = sim.run_experiment(sim.default_config("bound_comparison", sizes=(10, 12)))
    assert (out / "bound_comparison.csv").read_text() == table.to_csv()
    assert (out / "bound_comparison_mixed.csv").exists()
    for metric in ("improved_upper", "ks_upper"):
        lines = (out / "plot_data" / f"mixed__{metric}.csv").read_text().splitlines()
        assert lines[0] == "x,y" and [line.split(",")[0] for line in lines[1:]] == ["10", "12"]
        for line in lines[1:]:
            n = int(line.split(",")[0])
            assert float(line.split(",")[1]) == table.get(n_experts=n, metric=metric).value
    meta = json.loads((out / "bound_comparison.meta.json").read_text())
    assert meta["config"]["sizes"] == [10, 12] and meta["seed"] == 0


def test_reproduce_unknown_experiment(capsys):
    assert run("reproduce", "fig9") == 2
    assert "ConfigError" in capsys.readouterr().err


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as info:
        run("aggregate")
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        run("reproduce", "pnb_vs_nb", "--seed", -1)
    assert info.value.code == 2


def test_internal_error_exits_one(monkeypatch, tmp_path, capsys):
    def boom(*a, **k):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli.sim, "run_experiment", boom)
    assert run("reproduce", "pnb_vs_nb", "--out", tmp_path) == 1
    assert "internal error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    done = subprocess.run(
        [sys.executable, "-m", "pseudocomp", "analyze", "0.9"], capture_output=True, text=True
    )
    assert done.returncode == 0
    assert json.loads(done.stdout)["improved_upper"] == pytest.approx(0.6)


def test_write_read_round_trip(tmp_path):
    m = OpinionMatrix(np.array([[1, -1, 1], [-1, -1, 1]]), np.array([1, -1, -1]))
    cli.write_opinions(tmp_path / "x.csv", m, ["t1", "t2", "t3"])
    tasks, back = cli.read_opinions(tmp_path / "x.csv")
    assert tasks == ["t1", "t2", "t3"]
    assert np.array_equal(back.x, m.x) and np.array_equal(back.labels, m.labels)
    assert math.isfinite(float(len(tasks)))
