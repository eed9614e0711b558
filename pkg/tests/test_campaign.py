import json
import math

import numpy as np
import pytest

from opssa import cli
from opssa.campaign import CampaignConfig, ConfigError, dumps, run, run_trial
from opssa.states import StateSpec, generate, read_state, write_state
from opssa.tensor import ToleranceConfig


def records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


@pytest.mark.parametrize("command", ["verify-ssa", "verify-convexity", "verify-twirl",
                                     "sweep-projectors", "witness-nonhermitian"])
def test_every_command_passes(tmp_path, command):
    out = tmp_path / "r.jsonl"
    dims = (2,) if command == "verify-convexity" else (2, 2, 2)
    result = run(CampaignConfig(command, dims, trials=8, master_seed=3, output_path=str(out), projectors=2))
    recs = records(out)
    assert len(recs) == 8
    assert [r["trial_index"] for r in recs] == list(range(8))
    assert result.exit_status == 0
    for r in recs:
        assert set(r) == {"trial_index", "seed", "dims", "state_kind", "scalars", "verdict"}
        assert all(math.isfinite(v) for v in r["scalars"].values())


def test_fixtures(tmp_path):
    out = tmp_path / "f.jsonl"
    result = run(CampaignConfig("fixtures", output_path=str(out)))
    recs = {r["state_kind"]: r for r in records(out)}
    assert result.exit_status == 0
    assert abs(recs["ghz"]["scalars"]["cmi"] - math.log(2)) <= 1e-9
    assert recs["ghz"]["scalars"]["tc_entry_error"] <= 1e-9
    assert recs["product-AB-C"]["scalars"]["tc_norm"] <= 1e-10
    assert recs["product-A-BC"]["scalars"]["tc_norm"] <= 1e-10


def test_parallel_matches_serial(tmp_path):
    serial, parallel = tmp_path / "s.jsonl", tmp_path / "p.jsonl"
    base = dict(command="verify-ssa", dims=(2, 3, 2), trials=12, master_seed=99)
    run(CampaignConfig(**base, output_path=str(serial)))
    run(CampaignConfig(**base, output_path=str(parallel), jobs=3))
    assert serial.read_bytes() == parallel.read_bytes()


def test_trial_independent_of_order():
    config = CampaignConfig("verify-ssa", trials=5, master_seed=4)
    forward = [run_trial(config, i).record() for i in range(5)]
    backward = [run_trial(config, i).record() for i in reversed(range(5))]
    assert forward == backward[::-1]


def test_failure_sets_exit_status():
    # a PSD slack of effectively zero cannot absorb roundoff on Markov states
    config = CampaignConfig("verify-ssa", trials=4, kind="product-AB-C",
                            tolerances=ToleranceConfig(psd_tol=1e-300))
    result = run(config)
    assert result.failures > 0
    assert result.exit_status == 1


def test_anomaly_record(tmp_path):
    out = tmp_path / "a.jsonl"
    config = CampaignConfig("verify-ssa", trials=2, kind="induced-full", output_path=str(out),
                            tolerances=ToleranceConfig(support_cutoff_rel=0.5))
    result = run(config)
    recs = records(out)
    assert all(r["verdict"] == "fail" and r["anomaly"].startswith("SupportViolation") for r in recs)
    assert result.summary["anomalies"] == 2


def test_timing_is_opt_in():
    config = CampaignConfig("verify-twirl", trials=1)
    report = run_trial(config, 0)
    assert "elapsed" not in report.record()
    assert report.record(timing=True)["elapsed"] >= 0


def test_config_validation():
    with pytest.raises(ConfigError):
        CampaignConfig("search-extremal", restarts=0)
    with pytest.raises(ConfigError):
        CampaignConfig("verify-ssa", trials=0)
    with pytest.raises(ConfigError):
        CampaignConfig("verify-ssa", dims=(2, 2))
    with pytest.raises(ConfigError):
        CampaignConfig("verify-ssa", dims=(20, 20, 20))
    with pytest.raises(ConfigError):
        CampaignConfig("bogus")
    with pytest.raises(ConfigError):
        CampaignConfig("verify-convexity", function="sinh")


def test_dumps_17_digits():
    assert dumps({"x": 0.1, "n": [1, 2], "s": "a\"b"}) == '{"x": 0.10000000000000001, "n": [1, 2], "s": "a\\"b"}'
    with pytest.raises(ValueError):
        dumps(float("nan"))


def test_search_extremal_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        rep, state = tmp_path / f"{name}.jsonl", tmp_path / f"{name}.json"
        result = run(CampaignConfig("search-extremal", restarts=2, steps=20, master_seed=5,
                                    output_path=str(rep), state_out=str(state)))
        outs.append((rep.read_bytes(), state.read_bytes(), result.summary["best_min_eigenvalue"]))
    assert outs[0] == outs[1]
    best = read_state(tmp_path / "a.json")
    assert best.dims == (2, 2, 2)


class TestCli:
    def test_fixtures_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "fx.jsonl"
        assert cli.main(["--command", "fixtures", "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["failures"] == 0
        assert len(records(out)) == 4

    def test_stdout_records(self, capsys):
        assert cli.main(["--command", "verify-twirl", "--dims", "3,2,2", "--trials", "3"]) == 0
        captured = capsys.readouterr()
        assert len(captured.out.strip().splitlines()) == 3
        assert json.loads(captured.err)["trials"] == 3

    def test_invalid_config(self, capsys):
        assert cli.main(["--command", "search-extremal", "--restarts", "0"]) == 2
        assert "restarts" in capsys.readouterr().err

    def test_bad_dims(self):
        with pytest.raises(SystemExit):
            cli.main(["--command", "verify-ssa", "--dims", "2,x"])

    def test_state_in(self, tmp_path, capsys):
        path = tmp_path / "ghz.json"
        write_state(generate(StateSpec("ghz", (2, 2, 2))), path)
        out = tmp_path / "r.jsonl"
        assert cli.main(["--command", "verify-ssa", "--state-in", str(path), "--trials", "2", "--out", str(out)]) == 0
        recs = records(out)
        assert recs[0]["state_kind"] == "file"
        assert recs[0]["scalars"]["cmi"] == pytest.approx(math.log(2), abs=1e-12)

    def test_tolerance_flags(self, tmp_path):
        out = tmp_path / "r.jsonl"
        status = cli.main(["--command", "verify-ssa", "--kind", "product-AB-C", "--trials", "3",
                           "--tol-psd", "1e-300", "--out", str(out)])
        assert status == 1

    def test_unwritable_output(self, tmp_path, capsys):
        assert cli.main(["--command", "fixtures", "--out", str(tmp_path / "no" / "such" / "f")]) == 2

    def test_search_state_out(self, tmp_path):
        state = tmp_path / "best.json"
        assert cli.main(["--command", "search-extremal", "--restarts", "1", "--steps", "5",
                         "--state-out", str(state), "--out", str(tmp_path / "r.jsonl")]) == 0
        rho = read_state(state)
        assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-12)
