import csv
import json
import math

import pytest

from circletag import cli
from circletag.deployment import save_deployment, uniform_disk, worst_case_path


def read_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_single_uniform(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["single", "--n", "50", "--L", "20", "--seed", "1", "--out", str(out), "--trace"]) == 0
    robots = read_rows(out / "robots.csv")
    assert len(robots) == 50
    assert all(math.isfinite(float(r["tag_time"])) for r in robots)
    assert (out / "trace.csv").exists()
    assert "makespan" in capsys.readouterr().out
    text = (out / "summary.csv").read_text()
    assert text.startswith("# circletag ")
    assert "# base_seed: 1" in text


def test_single_one_robot(tmp_path):
    f = tmp_path / "one.txt"
    f.write_text("0,0\n")
    out = tmp_path / "o"
    assert cli.main(["single", "--file", str(f), "--out", str(out)]) == 0
    assert float(read_rows(out / "summary.csv")[0]["makespan"]) == 0.0


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["single", "--n", "5", "--out", str(blocker / "sub")]) == 2


def test_batch_deterministic(tmp_path):
    args = ["batch", "--n-list", "20,40", "--trials", "3", "--seed", "5", "--L", "6"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("results.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_rows(tmp_path / "a" / "results.csv")
    assert len(rows) == 6
    summary = read_rows(tmp_path / "a" / "summary.csv")
    assert [int(r["n"]) for r in summary] == [20, 40]
    assert all(int(r["trials"]) == 3 for r in summary)


def test_batch_summary_order_independent():
    recs = [cli.run_trial(15, 5.0, t, 1) for t in range(4)]
    assert cli.summarize(recs) == cli.summarize(recs[::-1])


def test_batch_rejects_zero_trials(tmp_path):
    assert cli.main(["batch", "--trials", "0", "--out", str(tmp_path)]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 2, "n_list": [12], "L": 4.0, "seed": 9}))
    out = tmp_path / "o"
    assert cli.main(["batch", "--config", str(cfg), "--seed", "10", "--out", str(out)]) == 0
    text = (out / "summary.csv").read_text()
    assert "# base_seed: 10" in text
    assert '"trials": 2' in text
    assert int(read_rows(out / "summary.csv")[0]["trials"]) == 2


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["batch", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["batch", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_bounds_worst_case(tmp_path):
    out = tmp_path / "b"
    assert cli.main(["bounds", "--generator", "worst_case_path", "--n", "10", "--M", "5", "--out", str(out)]) == 0
    row = read_rows(out / "bounds.csv")[0]
    assert float(row["M"]) == 5 and int(row["H"]) == 9
    assert float(row["eq1_bound"]) == pytest.approx(7300 * math.pi)


def test_bounds_two_robot_file(tmp_path):
    f = tmp_path / "d.txt"
    save_deployment(uniform_disk(2, 10.0, 3), f.open("wb"))
    out = tmp_path / "b"
    assert cli.main(["bounds", "--file", str(f), "--out", str(out)]) == 0
    row = read_rows(out / "bounds.csv")[0]
    p = uniform_disk(2, 10.0, 3).positions
    assert float(row["lower_bound"]) == pytest.approx(max(math.dist(p[0], p[1]) - 1, 0))


def test_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert cli.main(["bounds", "--file", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_verify_rings(tmp_path):
    assert cli.main(["verify-rings", "--trials", "10", "--out", str(tmp_path)]) == 2
    assert cli.main(["verify-rings", "--n", "200", "--L", "1", "--M", "5", "--trials", "100",
                     "--out", str(tmp_path)]) == 0
    assert len(read_rows(tmp_path / "rings.csv")) == 1


def test_invariant_exit_code(tmp_path, monkeypatch):
    from circletag.engine import SimulationInvariantError

    def boom(*a, **k):
        raise SimulationInvariantError("forced")

    monkeypatch.setattr(cli, "simulate", boom)
    assert cli.main(["single", "--n", "3", "--out", str(tmp_path)]) == 3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["nonsense"])
    assert info.value.code == 2


def test_worst_case_single(tmp_path):
    f = tmp_path / "w.txt"
    f.write_bytes(save_deployment(worst_case_path(4, 3.0)))
    assert cli.main(["single", "--file", str(f), "--offline", "exact", "--out", str(tmp_path / "o")]) == 0
    row = read_rows(tmp_path / "o" / "summary.csv")[0]
    assert float(row["offline_reference"]) <= float(row["makespan"])
