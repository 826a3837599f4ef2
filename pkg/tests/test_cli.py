import csv
import json

import pytest

from spinclock.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_tables_default(tmp_path):
    assert main(["tables", "--out", str(tmp_path)]) == EXIT_OK
    t1 = rows(tmp_path / "table1.csv")
    b0 = [r for r in t1 if r["outcome"] == "0"]
    assert float(b0[0]["prob"]) == 0.75
    assert sorted(float(r["prob_dE"]) for r in b0) == pytest.approx([1 / 12, 1 / 6, 3 / 4])
    assert float(b0[0]["cond_mean"]) == pytest.approx(1 / 3)
    t2 = rows(tmp_path / "table2.csv")
    assert float(t2[0]["overall_mean"]) == pytest.approx(1.0)
    assert "INFEASIBLE" in (tmp_path / "certificate.txt").read_text()
    man = json.loads((tmp_path / "tables_manifest.json").read_text())
    assert len(man["outputs"]) == 3


def test_tables_symmetric(tmp_path):
    main(["tables", "--out", str(tmp_path / "b")])
    assert main(["tables", "--who", "A", "--out", str(tmp_path / "a")]) == EXIT_OK
    a = [r["prob_dE"] for r in rows(tmp_path / "a" / "table1.csv")]
    b = [r["prob_dE"] for r in rows(tmp_path / "b" / "table1.csv")]
    assert a == b
    assert (tmp_path / "a" / "certificate.txt").read_text() == (tmp_path / "b" / "certificate.txt").read_text()


def test_clock_single_theta(tmp_path, capsys):
    code = main(["clock", "--system", "single-theta", "--theta", "0.7854", "--omega", "1", "--delta", "3", "--n", "128", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "fidelity to oracle: 1" in capsys.readouterr().out
    for name in ("trajectory.csv", "final_state.json", "oracle_diff.csv", "branches.csv", "clock_manifest.json"):
        assert (tmp_path / name).exists()
    diff = rows(tmp_path / "oracle_diff.csv")
    assert max(abs(float(r["diff"])) for r in diff) < 1e-9


def test_clock_chain3_near_projective(tmp_path):
    # pointer 1 = spin found up; projective values 1/2, 1/4, 1/4, 0
    want = {"11": 0.5, "10": 0.25, "01": 0.25, "00": 0.0}
    dev = []
    for wd in (0.05, 0.025):
        out = tmp_path / str(wd)
        assert main(["clock", "--system", "chain3", "--delta", str(wd), "--n", "128", "--out", str(out)]) == EXIT_OK
        r = {x["pointers"]: x for x in rows(out / "oracle_diff.csv")}
        assert max(abs(float(x["diff"])) for x in r.values()) < 1e-9
        dev.append(max(abs(float(r[k]["p_sim"]) - want[k]) for k in want))
    # the residual deviation is of order (ωΔ)^2
    assert dev[0] < 5e-3
    assert dev[0] / dev[1] == pytest.approx(4.0, rel=0.05)


def test_clock_sequential_kick_table(tmp_path):
    assert main(["clock", "--system", "chain3", "--sequential", "--n", "128", "--out", str(tmp_path)]) == EXIT_OK
    br = [r for r in rows(tmp_path / "branches.csv") if float(r["weight"]) > 1e-9]
    kicks_a = {float(r["kick_A"]) for r in br}
    assert kicks_a == {0.0, -2.0, -4.0}
    assert any(float(r["kick_A"]) == -4.0 and float(r["kick_B"]) == 4.0 for r in br)
    assert sum(float(r["weight"]) for r in br) == pytest.approx(1.0)


def test_clock_deterministic(tmp_path):
    args = ["clock", "--system", "two-pointers", "--delta", "1", "--n", "64"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("trajectory.csv", "oracle_diff.csv", "branches.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_clock_smooth_profile_runs(tmp_path):
    code = main(["clock", "--system", "single-theta", "--profile", "gaussian", "--method", "strang", "--substeps", "2", "--n", "128", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert not (tmp_path / "oracle_diff.csv").exists()


def test_clock_oracle_mismatch_exit_code(tmp_path, monkeypatch):
    import spinclock.clock_sim as cs

    monkeypatch.setattr(cs, "fidelity_to_oracle", lambda res: 0.5)
    code = main(["clock", "--system", "single-theta", "--n", "64", "--out", str(tmp_path)])
    assert code == EXIT_VALIDATION


@pytest.mark.parametrize("argv", [
    ["clock", "--system", "single-theta", "--alice-off"],
    ["clock", "--system", "single-theta", "--sequential"],
    ["clock", "--method", "strang"],
    ["clock", "--delta", "-1"],
    ["mediator", "--dims", "2"],
    ["mediator", "--target", "pair", "--dims", "1..3"],
    ["signalling", "--grid", "a,b"],
    ["nonsense"],
])
def test_usage_errors(argv, tmp_path):
    try:
        code = main(argv + ["--out", str(tmp_path)])
    except SystemExit as e:
        code = e.code
    assert code == EXIT_USAGE


def test_signalling_alice_off(tmp_path):
    assert main(["signalling", "--grid", "1.0", "--n", "64", "--alice-off", "--out", str(tmp_path)]) == EXIT_OK
    r = rows(tmp_path / "signalling.csv")
    assert len(r) == 1 and float(r[0]["trace_distance"]) <= 1e-12


def test_mediator_local(tmp_path):
    assert main(["mediator", "--target", "local-z", "--dims", "2", "--restarts", "1", "--out", str(tmp_path)]) == EXIT_OK
    r = rows(tmp_path / "mediator_scan.csv")
    assert float(r[0]["residual"]) < 1e-8
    sol = json.loads((tmp_path / "solution_d2.json").read_text())
    assert sol["realizable"]


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": "0.5", "n": 64}))
    assert main(["signalling", "--config", str(cfg), "--n", "999", "--out", str(tmp_path / "o")]) == EXIT_OK
    man = json.loads((tmp_path / "o" / "signalling_manifest.json").read_text())
    assert man["config"]["n"] == 64 and man["config"]["grid"] == [0.5]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["tables", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE


def test_validate_subset(tmp_path, capsys):
    assert main(["validate", "--criteria", "1,2", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "criterion  1: PASS" in out and "criterion  2: PASS" in out
    assert (tmp_path / "acceptance.txt").exists()


def test_threads_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SPINCLOCK_THREADS", "1")
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    assert main(["tables", "--out", str(tmp_path)]) == EXIT_OK
    import os

    assert os.environ["OMP_NUM_THREADS"] == "1"
