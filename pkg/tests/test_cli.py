import json

import pytest

from modules import cli


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_commands_are_discovered():
    names = [c.name() for c in cli.load_commands()]
    assert names == ["count", "predict", "sample", "prob", "sweep", "verify", "plot"]


def test_count(capsys):
    assert invoke(capsys, "count", "mahonian", "--n", "4", "--m", "2")[:2] == (0, "5\n")
    assert invoke(capsys, "count", "gap", "--n", "4", "--m", "2", "--k", "1")[:2] == (0, "3 2\n")
    assert invoke(capsys, "count", "weakcomp", "--t", "3", "--s", "2")[:2] == (0, "6\n")
    code, out, _ = invoke(capsys, "count", "prefix", "--n", "4", "--m", "2", "--k", "2", "--ell", "1", "--format", "json")
    assert code == 0
    record = json.loads(out)
    assert record["value"] == ["2"] and record["kind"] == "prefix"


def test_count_errors(capsys):
    code, _, err = invoke(capsys, "count", "mahonian", "--n", "4")
    assert code == 2 and "--m" in err
    assert invoke(capsys, "count", "mahonian", "--n", "400", "--m", "400", "--exact-budget", "10")[0] == 1
    assert invoke(capsys, "count", "gap", "--n", "4", "--m", "2", "--k", "4")[0] == 2
    assert invoke(capsys, "count", "bogus")[0] == 2
    assert invoke(capsys, "count", "mahonian", "--n", "4", "--m", "2", "--format", "svg")[0] == 2


def test_prob_exact(capsys):
    code, out, _ = invoke(capsys, "prob", "pattern", "--n", "4", "--m", "2", "--tau", "21")
    assert (code, out) == (0, "num=2 den=5 approx=0.4\n")
    code, out, _ = invoke(capsys, "prob", "pattern", "--n", "7", "--m", "5", "--tau", "1", "--exact")
    assert out == "num=1 den=1 approx=1.0\n"
    code, out, _ = invoke(capsys, "prob", "gap", "--n", "4", "--m", "2", "--k", "1", "--format", "json")
    assert json.loads(out) == {"num": "2", "den": "5", "approx": 0.4}


def test_prob_usage_errors(capsys):
    assert invoke(capsys, "prob", "pattern", "--n", "4", "--m", "2")[0] == 2
    assert invoke(capsys, "prob", "gap", "--n", "4", "--m", "2", "--k", "1", "--tau", "12")[0] == 2
    assert invoke(capsys, "prob", "pattern", "--n", "4", "--m", "9", "--tau", "12")[0] == 2
    assert invoke(capsys, "prob", "gap", "--n", "4", "--m", "2", "--k", "1", "--exact", "--mc")[0] == 2


def test_prob_csv(capsys):
    code, out, _ = invoke(capsys, "prob", "pattern", "--n", "4", "--m", "2", "--tau", "21", "--exact", "--format", "csv")
    assert (code, out) == (0, "num,den,approx\n2,5,0.4\n")
    argv = ("prob", "gap", "--n", "12", "--m", "10", "--k", "2", "--mc", "--samples", "200", "--format", "csv", "--no-progress")
    code, out, _ = invoke(capsys, *argv)
    header, row = out.splitlines()
    assert header == "estimate,trials,successes,ci_low,ci_high,approximate"
    assert row.split(",")[1] == "200"


def test_seed_out_of_range(capsys):
    code, _, err = invoke(capsys, "sample", "--n", "5", "--m", "3", "--seed", "-1")
    assert code == 2 and "--seed" in err
    assert invoke(capsys, "sample", "--n", "5", "--m", "3", "--seed", str(1 << 64))[0] == 2
    assert invoke(capsys, "sample", "--n", "5", "--m", "3", "--seed", str((1 << 64) - 1))[0] == 0


def test_prob_monte_carlo(capsys):
    argv = ("prob", "gap", "--n", "12", "--m", "10", "--k", "2", "--mc", "--samples", "500", "--seed", "3", "--no-progress")
    code, out, _ = invoke(capsys, *argv)
    assert code == 0
    fields = dict(item.split("=") for item in out.split())
    assert fields["trials"] == "500" and 0 <= float(fields["estimate"]) <= 1
    assert invoke(capsys, *argv)[1] == out


def test_sample(capsys):
    code, out, _ = invoke(capsys, "sample", "--n", "5", "--m", "0")
    assert (code, out) == (0, "1 2 3 4 5\n")
    argv = ("sample", "--n", "20", "--m", "50", "--count", "3", "--seed", "4", "--format", "json")
    code, out, _ = invoke(capsys, *argv)
    records = json.loads(out)
    assert len(records) == 3 and all(r["inv"] == 50 for r in records)
    assert sorted(records[0]["perm"]) == list(range(1, 21))
    assert invoke(capsys, *argv)[1] == out
    code, out, _ = invoke(capsys, "sample", "--n", "6", "--m", "15", "--format", "csv")
    assert out.splitlines() == ["index,inv,perm", "0,15,6 5 4 3 2 1"]


def test_sample_errors(capsys):
    assert invoke(capsys, "sample", "--n", "4", "--m", "7")[0] == 2
    assert invoke(capsys, "sample", "--n", "4", "--m", "1", "--count", "0")[0] == 2
    assert invoke(capsys, "sample", "--n", "4", "--m", "1", "--streams", "0")[0] == 2


def test_svg_outputs(capsys, tmp_path):
    code, out, _ = invoke(capsys, "sample", "--n", "10", "--m", "12", "--format", "svg")
    assert code == 0 and "<svg" in out
    target = tmp_path / "p.svg"
    code, out, _ = invoke(capsys, "plot", "--perm", "2413", "--out", str(target))
    assert code == 0 and out == ""
    assert "<svg" in target.read_text()
    assert invoke(capsys, "plot", "--perm", "2413", "--n", "4")[0] == 2
    assert invoke(capsys, "plot")[0] == 2


def test_predict(capsys):
    code, out, _ = invoke(capsys, "predict", "gap", "--alpha", "1")
    assert code == 0 and out.startswith("prob=0.33869")
    code, out, _ = invoke(capsys, "predict", "pattern", "--tau", "321", "--alpha", "2")
    assert out == f"prob={2.718281828459045 ** -1 / 6:.12g}\n"
    code, out, _ = invoke(capsys, "predict", "comptail", "--t", "10000", "--s", "1000000", "--eps", "1", "--format", "json")
    record = json.loads(out)
    assert record["threshold"] == pytest.approx(1842.068, abs=1e-3) and record["bound"] == pytest.approx(0.01)
    code, out, _ = invoke(capsys, "predict", "gap", "--n", "1000", "--m", "100000", "--k", "100", "--alpha-rule", "asymptotic")
    assert code == 0 and out.startswith("prob=0.33869")


def test_predict_errors(capsys):
    assert invoke(capsys, "predict", "gap")[0] == 2
    assert invoke(capsys, "predict", "gap", "--alpha", "0")[0] == 2
    assert invoke(capsys, "predict", "pattern", "--tau", "12", "--k", "2", "--alpha", "1")[0] == 2
    assert invoke(capsys, "predict", "gap", "--n", "10", "--m", "5")[0] == 2


def test_verify(capsys):
    code, out, _ = invoke(capsys, "verify", "--suite", "bijection")
    assert code == 0
    lines = out.splitlines()
    assert all(line.startswith("PASS bijection/") for line in lines[:-1])
    assert lines[-1].endswith("checks passed")
    assert invoke(capsys, "verify", "--suite", "nonesuch")[0] == 2
    code, out, _ = invoke(capsys, "verify", "--suite", "bijection", "--format", "json")
    assert all(json.loads(line)["passed"] for line in out.splitlines())


def test_sweep(capsys, tmp_path):
    spec = tmp_path / "gap.conf"
    spec.write_text("kind = gap_sweep\nn = 12\nm = 15\nk_grid = 1, 3\nsamples = 100\n")
    argv = ("sweep", "--spec", str(spec), "--samples", "400", "--seed", "2", "--no-progress")
    code, out, _ = invoke(capsys, *argv)
    lines = out.splitlines()
    assert lines[0].startswith("kind,label,n,m,k,")
    assert len(lines) == 3
    assert all(line.split(",")[7] == "400" for line in lines[1:])
    assert code in (0, 1)
    assert invoke(capsys, *argv)[1] == out
    assert invoke(capsys, "sweep")[0] == 2
    assert invoke(capsys, "sweep", "--spec", str(tmp_path / "missing.conf"))[0] == 2
    target = tmp_path / "gap.csv"
    code, out, _ = invoke(capsys, *argv, "--out", str(target))
    assert out == "" and target.read_text().splitlines()[0].startswith("kind,label,")
    meta = json.loads((tmp_path / "gap.csv.meta.json").read_text())
    assert meta["seed"] == 2 and meta["version"] == "0.1.0" and meta["spec"]["samples"] == 400
    assert meta["sampler"] == "dp" and meta["approximate"] is False
    bad = tmp_path / "bad.conf"
    bad.write_text("kind = gap_sweep\nn = 12\nm = 15\nk = 20\n")
    assert invoke(capsys, "sweep", "--spec", str(bad))[0] == 2


def test_version(capsys):
    assert cli.main(["--version"]) == 0
    assert "invperm 0.1.0" in capsys.readouterr().out
