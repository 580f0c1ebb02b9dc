import csv
import json
from types import SimpleNamespace

import pytest

from tabu_forge.cli import ConfigError, main, parse_config
from tabu_forge.problems import make_two_basin
from tabu_forge.results import CONVERGENCE_COLUMNS, read_convergence_log, summarize, write_convergence_log
from tabu_forge.tabu import SearchConfig, run_search


def strip_wall_time(path):
    return "".join(line for line in open(path) if '"wall_time"' not in line)


def test_single_run_outputs(tmp_path):
    assert main(["--problem", "twobasin", "--seed", "42", "--runs", "1", "--out-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "twobasin-42.json").read_text())
    assert data["problem"] == "twobasin" and data["seed"] == 42
    assert set(data["snapshots"]) == {"20", "100", "1000", "converged"}
    assert data["evaluations"] <= data["config"]["engine"]["max_evaluations"]
    rows = read_convergence_log(tmp_path / "twobasin-42-convergence.csv")
    assert len(rows) == data["evaluations"]
    assert (tmp_path / "twobasin-summary.csv").exists()


def test_tenbar_interface_contract(tmp_path):
    assert main(["--problem", "tenbar", "--seed", "42", "--runs", "1", "--max-evals", "300", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "tenbar-42.json").exists()
    assert (tmp_path / "tenbar-42-convergence.csv").exists()


def test_batch_of_runs_with_snapshots(tmp_path):
    code = main(["--problem", "pole2", "--runs", "5", "--snapshots", "20,100,1000", "--max-evals", "120",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    files = sorted(tmp_path.glob("pole2-?.json"))
    assert len(files) == 5
    for f in files:
        assert set(json.loads(f.read_text())["snapshots"]) == {"20", "100", "1000", "converged"}
    with open(tmp_path / "pole2-summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["snapshot", "min", "max", "median"]
    assert [r[0] for r in rows[1:]] == ["20", "100", "1000", "converged"]


def test_unknown_problem_exit_code(capsys):
    assert main(["--problem", "nosuch"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unreadable_config_exit_code(tmp_path):
    assert main(["--problem", "twobasin", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("tabu_tenure = 3\n")
    assert main(["--problem", "twobasin", "--config", str(bad)]) == 2


def test_unwritable_output_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--problem", "twobasin", "--runs", "1", "--out-dir", str(blocker / "sub")]) == 1
    assert "error" in capsys.readouterr().err


def test_run_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("problem.no_such_option = 1\n")
    assert main(["--problem", "twobasin", "--runs", "1", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment\n"
        "engine.tabu_tenure = 3\n"
        "engine.best_memory_size = 4\n"
        "run.max_evals = 80\n"
        "run.seed = 7\n"
        "run.runs = 1\n"
        "run.snapshots = 10,50\n"
        "problem.start = -2.5,-2.5\n"
    )
    assert main(["--problem", "twobasin", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "twobasin-7.json").read_text())
    assert data["config"]["engine"]["tabu_tenure"] == 3
    assert data["config"]["engine"]["max_evaluations"] == 80
    assert data["config"]["run"]["snapshots"] == [10, 50]
    assert set(data["snapshots"]) == {"10", "50", "converged"}
    # flags override the file
    assert main(["--problem", "twobasin", "--config", str(cfg), "--max-evals", "60", "--seed", "8",
                 "--strict-paper", "--out-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "twobasin-8.json").read_text())
    assert data["config"]["engine"]["max_evaluations"] == 60
    assert data["config"]["engine"]["aspiration"] is False
    assert data["evaluations"] <= 60


def test_env_var_overrides_out_dir(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("TABU_FORGE_OUT", str(target))
    assert main(["--problem", "twobasin", "--runs", "1", "--max-evals", "30", "--out-dir", str(tmp_path / "flag")]) == 0
    assert (target / "twobasin-0.json").exists()
    assert not (tmp_path / "flag").exists()


def test_parse_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config("engine.nonsense = 1\n")
    with pytest.raises(ConfigError):
        parse_config("just words\n")
    assert parse_config("engine.aspiration = false\nengine.initial_step = 1,2\n")["engine"] == {
        "aspiration": False,
        "initial_step": [1, 2],
    }


def test_rerun_is_byte_identical(tmp_path):
    args = ["--problem", "pole1", "--runs", "2", "--max-evals", "150"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    for name in ("pole1-0.json", "pole1-1.json"):
        assert strip_wall_time(tmp_path / "a" / name) == strip_wall_time(tmp_path / "b" / name)
    for name in ("pole1-0-convergence.csv", "pole1-summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_convergence_log_format(tmp_path):
    res = run_search(make_two_basin(), SearchConfig(max_evaluations=3))
    out = tmp_path / "log.csv"
    write_convergence_log(res.history, out)
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(CONVERGENCE_COLUMNS)
    with pytest.raises(ValueError):
        write_convergence_log([], out)


def test_convergence_log_columns(tmp_path):
    res = run_search(make_two_basin(start=None), SearchConfig(seed=3, max_evaluations=2000))
    out = tmp_path / "log.csv"
    write_convergence_log(res.history, out)
    rows = read_convergence_log(out)
    best = [float(r["best_so_far"]) for r in rows]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert {r["phase"] for r in rows} <= {"LOCAL", "INTENSIFIED", "DIVERSIFIED", "REDUCED"}
    assert [int(r["eval_index"]) for r in rows] == list(range(1, len(rows) + 1))


def test_summarize_examples(tmp_path):
    runs = [
        SimpleNamespace(snapshots={"20": 700.0, "100": 300.0, "1000": 66.0, "converged": 60.0}),
        SimpleNamespace(snapshots={"20": 900.0, "100": 500.0, "1000": 425.0, "converged": 400.0}),
    ]
    rows = summarize(runs, tmp_path / "s.csv")
    assert rows[2][:3] == ("1000", 66.0, 425.0)
    assert len(rows) == 4
    assert (tmp_path / "s.csv").read_text().splitlines()[3].startswith("1000,66.0,425.0,")
    (single,) = [summarize(runs[:1])[0]]
    assert single[1] == single[2] == single[3]
    with pytest.raises(ValueError):
        summarize([])
