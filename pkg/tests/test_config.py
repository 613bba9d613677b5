import glob
import json
import os

import pytest
from pydantic import ValidationError

from lib.invperm.config import REPORT_COLUMNS, ExperimentReport, ExperimentSpec, ReportRow, load_spec
from modules.shared import CONFIGS_DIR


def write_conf(tmp_path, text):
    path = tmp_path / "spec.conf"
    path.write_text(text)
    return str(path)


def test_load_spec(tmp_path):
    path = write_conf(
        tmp_path,
        "# comment\nkind = gap_sweep\n\nn = 50\nm = 100  # trailing\nk-grid = 1, 5;10\nsamples = 20\n",
    )
    spec = load_spec(path)
    assert spec.kind == "gap_sweep"
    assert (spec.n, spec.m, spec.samples) == (50, 100, 20)
    assert spec.k_values() == [1, 5, 10]
    assert load_spec(path, samples=7, seed=None).samples == 7


def test_load_spec_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_spec(str(tmp_path / "missing.conf"))
    with pytest.raises(ValueError):
        load_spec(write_conf(tmp_path, "kind gap_sweep\n"))


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(CONFIGS_DIR, "*.conf"))))
def test_shipped_configs_parse(path):
    spec = load_spec(path)
    assert spec.samples >= 1


def test_power_schedule():
    spec = ExperimentSpec(kind="pattern_census", n=4000, m_c=1, m_gamma=1.5, k=2)
    assert spec.m_for(4000) == 252983
    linear = ExperimentSpec(kind="exact_vs_asym", n_grid="200,400", m_c=10, k=2)
    assert linear.n_values() == [200, 400]
    assert linear.m_for(400) == 4000
    assert ExperimentSpec(kind="pattern_census", n=5, m_c=100, m_gamma=2, k=2).m_for(5) == 10


def test_position_and_ranges():
    spec = ExperimentSpec(kind="eq1_equivalence", n=10, m=8, k=3, position="random")
    assert spec.position == "random"
    assert spec.r_values() == list(range(3, 11))
    assert ExperimentSpec(kind="adjacent_descents", n=10, m=3, position="4").position == 4


@pytest.mark.parametrize(
    "values",
    [
        {"kind": "pattern_census", "n": 5, "m": 2, "k": 6},
        {"kind": "pattern_census", "n": 20, "m": 2, "k": 9},
        {"kind": "pattern_census", "n": 20, "m": 2, "k": 9, "census": "exact"},
        {"kind": "pattern_census", "n": 20, "m": 2},
        {"kind": "pattern_census", "n": 20, "k": 2},
        {"kind": "gap_sweep", "n": 10, "m": 2, "k": 10},
        {"kind": "gap_sweep", "n": 10, "m": 2},
        {"kind": "tail_weakcomp", "t": 1, "s": 10, "epsilon": 1},
        {"kind": "tail_density", "k": 10},
        {"kind": "eq1_equivalence", "n": 10, "m": 8, "k": 3, "r_grid": "2"},
        {"kind": "exact_vs_asym", "m": 10, "k": 2},
        {"kind": "exact_vs_asym", "n": 10, "m": 10},
        {"kind": "exact_vs_asym", "n": 10, "m": 10, "k_grid": "2,4", "rho": 0.5, "beta": 1},
        {"kind": "exact_vs_asym", "n": 10, "m": 10, "k_grid": "2,4"},
        {"kind": "gap_sweep", "n": 10, "m": 2, "k": 1, "seed": 1 << 64},
        {"kind": "adjacent_descents", "n": 10, "m": 3, "position": "last"},
        {"kind": "adjacent_descents", "n": 10, "m": 3, "samples": 0},
        {"kind": "adjacent_descents", "n": 10, "m": 3, "sampler": "gibbs"},
        {"kind": "gibbs", "n": 10},
    ],
)
def test_invalid_specs(values):
    with pytest.raises(ValidationError):
        ExperimentSpec(**values)


def test_dense_pattern_grid_needs_no_single_k():
    spec = ExperimentSpec(kind="exact_vs_asym", n=40, m=100, k_grid="2,4", rho=0.5)
    assert spec.k is None and spec.k_values() == [2, 4]
    assert ExperimentSpec(kind="gap_sweep", n=10, m=2, k=1, seed=(1 << 64) - 1).seed == (1 << 64) - 1


def test_single_census_allows_long_patterns():
    spec = ExperimentSpec(kind="pattern_census", n=20, m=2, k=9, census="single")
    assert spec.k == 9


def test_report_row_interval():
    ReportRow(kind="gap_sweep", ci_low=0.1, ci_high=0.2)
    with pytest.raises(ValidationError):
        ReportRow(kind="gap_sweep", ci_low=0.3, ci_high=0.2)
    with pytest.raises(ValidationError):
        ReportRow(kind="gap_sweep", ci_low=-0.1, ci_high=0.2)


def test_report_outputs(tmp_path):
    spec = ExperimentSpec(kind="gap_sweep", n=10, m=5, k=1)
    rows = [
        ReportRow(kind="gap_sweep", label="gap", n=10, m=5, k=1, trials=4, successes=1, estimate=0.25, passed=True),
        ReportRow(kind="gap_sweep", label="gap", n=10, m=5, k=2, approximate=True, passed=False, note="a, b"),
    ]
    report = ExperimentReport(spec=spec, rows=rows)
    assert not report.passed and report.approximate

    out = tmp_path / "report.csv"
    text = report.to_csv(str(out))
    lines = text.splitlines()
    assert lines[0].split(",") == REPORT_COLUMNS
    assert out.read_text() == text
    first = dict(zip(REPORT_COLUMNS, lines[1].split(",")))
    assert (first["estimate"], first["passed"], first["approximate"], first["exact"]) == ("0.25", "1", "0", "")
    assert lines[2].endswith('"a, b"')
    assert "wall_time" not in lines[0]
    assert report.to_csv(header=False).splitlines()[0] == lines[1]

    records = [json.loads(line) for line in report.to_jsonl().splitlines()]
    assert records[1]["k"] == 2 and records[1]["passed"] is False
