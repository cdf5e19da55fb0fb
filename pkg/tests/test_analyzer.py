import json

import pandas as pd
import pytest

from analyzer import ExperimentAnalyzer, format_summary, write_table
from utils import ConfigError
from conftest import GRID_3X3, make_config, witness_data

BLACK_HOLE = {"topology": GRID_3X3, "adversaries": [{"node": 1, "behavior": "black_hole"}],
              "timing": {"duration": 200}}


def _read(path):
    return pd.read_csv(path, comment="#")


def test_write_table_header_and_body(tmp_path):
    path = write_table(pd.DataFrame({"a": [1, 2], "b": [0.5, 1 / 3]}), tmp_path / "t.csv", 3, "abc", axis="m_t")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# tool=sensorguard") and "seed=3 config_hash=abc axis=m_t" in lines[0]
    assert lines[1] == "a,b"
    assert lines[3] == "2,0.333333333333"


def test_export_run_writes_every_log(tmp_path):
    config = make_config(BLACK_HOLE)
    analyzer = ExperimentAnalyzer(config, tmp_path)
    sim = analyzer.run()
    paths = analyzer.export_run(sim)
    names = {p.name for p in paths}
    assert names == {"messages.csv", "decisions.csv", "trust_snapshots.csv", "metrics.csv", "alerts.csv",
                     "summary.json", "summary_report.txt"}

    messages = _read(tmp_path / "messages.csv")
    assert list(messages.columns) == ["tick", "msg_type", "src", "dst", "accused", "level_or_value"]
    assert set(messages.msg_type) == {"alert", "conf_req", "conf_resp"}
    decisions = _read(tmp_path / "decisions.csv")
    assert decisions.iloc[0].resolved == "validated"
    assert "rounding=half_away_from_zero" in (tmp_path / "trust_snapshots.csv").read_text().splitlines()[0]

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config_hash"] == config.config_hash
    assert summary["metrics"]["alerts"] == sim.report.alerts
    assert "Run Summary" in (tmp_path / "summary_report.txt").read_text()


def test_export_run_is_byte_identical_on_rerun(tmp_path):
    config = make_config(BLACK_HOLE)
    for out in ("a", "b"):
        analyzer = ExperimentAnalyzer(config, tmp_path / out)
        analyzer.export_run(analyzer.run())
    for name in ("messages.csv", "decisions.csv", "trust_snapshots.csv", "metrics.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_format_summary_mentions_overhead(tmp_path):
    report = ExperimentAnalyzer(make_config(), tmp_path).run().report
    text = format_summary(report)
    assert text.startswith("=" * 70)
    assert "conf_req: 0" in text


def test_policy_sweep_matches_closed_form(tmp_path):
    analyzer = ExperimentAnalyzer(make_config(witness_data(witnesses=4)), tmp_path)
    table = analyzer.sweep("policy", ["low", "medium", "high", "intrusion_aware"], runs=2)
    assert list(table.policy) == ["low", "medium", "high", "intrusion_aware"]
    assert (table.mean_messages == table.analytic_messages).all()
    means = dict(zip(table.policy, table.mean_messages))
    assert means["low"] <= means["intrusion_aware"] <= means["high"]
    path = analyzer.export_sweep("policy", table, runs=2)
    assert "axis=policy runs=2" in path.read_text().splitlines()[0]


def test_m_t_sweep_grows_the_witness_cluster(tmp_path):
    analyzer = ExperimentAnalyzer(make_config(witness_data(witnesses=2, level_weights=[0, 0, 1])), tmp_path)
    assert "topology.cluster_size=12" in analyzer.axis_overrides("m_t", 6)
    table = analyzer.sweep("m_t", [2, 4, 6], runs=1)
    assert table.mean_messages.tolist() == [12.0, 24.0, 36.0]
    assert (table.mean_messages == table.analytic_messages).all()


def test_sweep_rejects_bad_axes(tmp_path):
    grid = ExperimentAnalyzer(make_config(), tmp_path)
    with pytest.raises(ConfigError, match="witness"):
        grid.axis_overrides("m_t", 4)
    with pytest.raises(ConfigError, match="sweep axis"):
        grid.axis_overrides("speed", 1)
    with pytest.raises(ConfigError, match="policy"):
        grid.sweep("policy", ["maximum"], runs=1)
    with pytest.raises(ConfigError, match="runs"):
        grid.sweep("tolerance", [0], runs=0)


def test_odd_m_t_needs_no_medium_claims(tmp_path):
    mixed = ExperimentAnalyzer(make_config(witness_data(witnesses=2)), tmp_path)
    with pytest.raises(ConfigError, match="even m_t"):
        mixed.axis_overrides("m_t", 3)
    medium = ExperimentAnalyzer(make_config(witness_data(witnesses=2), "protocol.reliability=medium"), tmp_path)
    with pytest.raises(ConfigError, match="even m_t"):
        medium.sweep("m_t", [3], runs=1)

    no_medium = ExperimentAnalyzer(make_config(witness_data(witnesses=2, level_weights=[1, 0, 1])), tmp_path)
    table = no_medium.sweep("m_t", [3, 5], runs=1)
    assert (table.mean_messages == table.analytic_messages).all()
