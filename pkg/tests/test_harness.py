import json

import pytest
from click.testing import CliRunner

from setupfree.errors import ParameterError
from setupfree.harness.cli import main
from setupfree.harness.experiments import ExperimentConfig, fit_loglog, run_experiment, run_trial, summarize
from setupfree.harness.presets import replay
from setupfree.simnet import Transcript


@pytest.fixture
def cli(tmp_path, monkeypatch):
    monkeypatch.setenv("SETUPFREE_OUT", str(tmp_path))
    runner = CliRunner()
    return lambda *args: runner.invoke(main, list(args))


def rows(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_config_validation_names_the_field():
    with pytest.raises(ParameterError, match="^f: "):
        ExperimentConfig("rbc", ns=[3], f=1)
    with pytest.raises(ParameterError, match="protocol"):
        ExperimentConfig("paxos")
    with pytest.raises(ParameterError, match="trials"):
        ExperimentConfig("rbc", trials=0)
    assert ExperimentConfig("rbc", ns=[7]).f_for(7) == 2


def test_run_writes_summary_and_table(cli, tmp_path):
    r = cli("run", "--protocol", "coin", "--n", "4", "--trials", "5", "--coin", "seeding")
    assert r.exit_code == 0, r.output
    assert "common_rate" in r.output
    (row,) = rows(tmp_path / "coin-s0.summary.jsonl")
    assert row["trials"] == 5 and 0 <= row["common_rate"] <= 1
    assert len(rows(tmp_path / "coin-s0.records.jsonl")) == 5


def test_identical_invocations_give_identical_files(cli, tmp_path):
    cli("run", "--protocol", "aba", "--n", "4", "--trials", "3", "--adversary", "mixed")
    a = (tmp_path / "aba-s0.summary.jsonl").read_bytes()
    cli("run", "--protocol", "aba", "--n", "4", "--trials", "3", "--adversary", "mixed")
    assert (tmp_path / "aba-s0.summary.jsonl").read_bytes() == a


def test_avss_messages_grow_with_n():
    recs = run_experiment(ExperimentConfig("avss", ns=[4, 7, 10, 13], scheduler="fifo"))
    out = summarize(recs)
    assert [r["n"] for r in out] == [4, 7, 10, 13]
    msgs = [r["mean_messages"] for r in out]
    assert msgs == sorted(msgs) and len(set(msgs)) == 4


def test_fit_and_its_errors(cli, tmp_path):
    assert cli("run", "--protocol", "rbc", "--n", "4,7,10", "--scheduler", "fifo").exit_code == 0
    r = cli("fit", str(tmp_path / "rbc-s0.summary.jsonl"), "--metric", "mean_messages")
    out = json.loads(r.output)
    # RBC sends 2n^2 + n messages, so the slope sits a bit below 2
    assert r.exit_code == 0 and 1.8 < out["slope"] < 2.0
    assert cli("fit", str(tmp_path / "rbc-s0.summary.jsonl"), "--metric", "nope").exit_code == 2
    assert cli("run", "--protocol", "rbc", "--n", "4,7", "--seed", "1").exit_code == 0
    assert cli("fit", str(tmp_path / "rbc-s1.summary.jsonl")).exit_code == 2


def test_constant_metric_has_zero_slope():
    slope, icept = fit_loglog([4, 7, 10, 13], [5.0] * 4)
    assert slope == pytest.approx(0, abs=1e-12)
    assert icept == pytest.approx(pytest.importorskip("math").log(5))
    with pytest.raises(ParameterError):
        fit_loglog([4, 4, 7], [1, 2, 3])


def test_usage_errors_exit_2(cli, tmp_path):
    assert cli("run", "--protocol", "rbc", "--n", "3", "--f", "1").exit_code == 2
    assert cli("run", "--n", "4").exit_code == 2
    assert cli("run", "--protocol", "rbc", "--n", "x").exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": 1}')
    assert cli("run", "--config", str(bad)).exit_code == 2


def test_config_file_with_flag_override(cli, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"protocol": "rbc", "n": [4, 7], "trials": 2, "seed": 9}))
    assert cli("run", "--config", str(conf), "--trials", "1").exit_code == 0
    out = rows(tmp_path / "rbc-s9.summary.jsonl")
    assert [(r["n"], r["trials"]) for r in out] == [(4, 1), (7, 1)]


def test_preset_exit_code_and_outputs(cli, tmp_path):
    r = cli("run", "--preset", "c5", "--scale", "0.02")
    assert r.exit_code == 0, r.output
    assert "PASS" in r.output
    assert all(c["ok"] for c in rows(tmp_path / "c5.checks.jsonl"))


def test_replay_clean_and_tampered(cli, tmp_path):
    assert cli("run", "--protocol", "election", "--transcripts", "1", "--seed", "4").exit_code == 0
    path = tmp_path / "election-s4-n4-t0.sftr"
    r = cli("replay", str(path))
    assert r.exit_code == 0 and "no divergence" in r.output
    buf = bytearray(path.read_bytes())
    buf[-1] ^= 1
    path.write_bytes(bytes(buf))
    r = cli("replay", str(path))
    assert r.exit_code == 1 and r.output.strip()
    path.write_bytes(bytes(buf[:-2]))
    r = cli("replay", str(path))
    assert r.exit_code == 1 and "offset" in r.output


def test_replay_preserves_metrics():
    cfg = ExperimentConfig("seeding", adversary="random", seed=3)
    _, res = run_trial(cfg, 4, 0, record=True)
    again, diff = replay(Transcript.from_bytes(res.transcript.to_bytes()))
    assert diff == [] and again.metrics == res.metrics
