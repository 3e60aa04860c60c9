import json
from importlib import resources

import numpy as np
import pytest
from click.testing import CliRunner

from offsetlock import CounterSeries, read_trace_csv
from offsetlock.cli import main
from offsetlock.metrology import read_allan_csv, write_series_csv


@pytest.fixture
def runner():
    return CliRunner()


def golden_path(name):
    return str(resources.files("offsetlock") / "scenarios" / name)


class TestSynth:
    def test_writes_trace(self, runner, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({"h": {"0": 2.0}, "drift_rate_hz_per_s": 1.0}))
        out = tmp_path / "trace.csv"
        result = runner.invoke(main, ["synth", "--spec", str(spec_path),
                                      "--duration", "8", "--dt", "0.5",
                                      "--seed", "7", "--nominal-hz", "1000",
                                      "-o", str(out)])
        assert result.exit_code == 0, result.output
        trace = read_trace_csv(out)
        assert len(trace) == 16
        assert trace.nominal_hz == 1000
        assert trace.seed == 7


class TestAdev:
    def _series_csv(self, tmp_path):
        rng = np.random.default_rng(1)
        series = CounterSeries(nominal_hz=30_000_000, gate_s=1.0,
                               readings=rng.normal(size=64))
        path = tmp_path / "series.csv"
        write_series_csv(series, path)
        return path

    def test_stdout_listing(self, runner, tmp_path):
        path = self._series_csv(tmp_path)
        result = runner.invoke(main, ["adev", str(path), "--taus", "1,2,4"])
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0] == "tau_s,sigma,units,n_pairs"
        assert len(lines) == 4

    def test_output_file_and_fractional(self, runner, tmp_path):
        path = self._series_csv(tmp_path)
        out = tmp_path / "adev.csv"
        result = runner.invoke(main, ["adev", str(path), "--taus", "1,2",
                                      "--fractional", "30000000", "-o", str(out)])
        assert result.exit_code == 0, result.output
        back = read_allan_csv(out)
        assert back.units == "fractional"
        assert back.taus_s.size == 2

    def test_nonoverlapping_flag(self, runner, tmp_path):
        path = self._series_csv(tmp_path)
        a = runner.invoke(main, ["adev", str(path), "--taus", "2"])
        b = runner.invoke(main, ["adev", str(path), "--taus", "2", "--nonoverlapping"])
        assert a.output != b.output

    def test_octave_default(self, runner, tmp_path):
        path = self._series_csv(tmp_path)
        result = runner.invoke(main, ["adev", str(path)])
        assert result.exit_code == 0
        # octave grid up to span/4 = 16 s: 1, 2, 4, 8, 16
        assert len(result.output.strip().splitlines()) == 6


class TestChainCommand:
    DOC = {
        "sources": {
            "a": {"nominal_hz": 198_000_000_000_000, "sigma_abs_hz": 710.0},
            "b": {"nominal_hz": 297_000_000_000_000, "sigma_abs_hz": 1000.0},
        },
        "operations": [{"op": "sfg", "in": ["a", "b"], "out": "c"}],
        "afc": {"center_hz": 495_000_000_000_000, "width_hz": 4e6,
                "stability_target_hz": 1e5},
        "budget_node": "c",
    }

    def test_passing_budget_exit_zero(self, runner, tmp_path):
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(self.DOC))
        result = runner.invoke(main, ["chain", str(path)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["budget"]["stability_pass"]

    def test_failing_budget_exit_one(self, runner, tmp_path):
        doc = json.loads(json.dumps(self.DOC))
        doc["sources"]["a"]["sigma_abs_hz"] = 5e5
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["chain", str(path)])
        assert result.exit_code == 1

    def test_output_file(self, runner, tmp_path):
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(self.DOC))
        out = tmp_path / "budget.json"
        result = runner.invoke(main, ["chain", str(path), "-o", str(out)])
        assert result.exit_code == 0
        assert "budget" in json.loads(out.read_text())


class TestRunCommand:
    def test_golden_chain_scenario(self, runner, tmp_path):
        result = runner.invoke(main, ["run", golden_path("chain_afc_606.json"),
                                      "-o", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        verdict = json.loads(result.output)
        assert verdict["overall_pass"]

    def test_invalid_config_exit_two(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "x", "duration_s": 1.0, "dt_s": 0.5,
                                    "locks": [{"id": "l", "laser": "nope", "comb": "nope",
                                               "f_lock_hz": 1.0}]}))
        result = runner.invoke(main, ["run", str(path), "-o", str(tmp_path / "out")])
        assert result.exit_code == 2
        assert "config error" in result.output

    def test_seeds_expansion(self, runner, tmp_path):
        doc = {
            "name": "tiny", "seed": 1, "duration_s": 8.0, "dt_s": 0.5,
            "oscillators": {"osc": {"nominal_hz": 1000,
                                    "noise": {"drift_rate_hz_per_s": 1.0}}},
            "measurements": [{"id": "pp", "kind": "peak_to_peak",
                              "signal": "freerun:osc", "gate_s": 1.0}],
        }
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["run", str(path), "-o", str(tmp_path / "out"),
                                      "--seeds", "2"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "tiny_seed1").is_dir()
        assert (tmp_path / "out" / "tiny_seed2").is_dir()

    def test_out_dir_env_var(self, runner, tmp_path):
        result = runner.invoke(main, ["run", golden_path("chain_afc_606.json")],
                               env={"OLS_OUT_DIR": str(tmp_path / "envroot")})
        assert result.exit_code == 0, result.output
        assert (tmp_path / "envroot" / "chain_afc_606" / "report.json").exists()


class TestLockCommand:
    def test_time_domain_block(self, runner, tmp_path):
        result = runner.invoke(main, ["lock", golden_path("fig4_lock_1010_timedomain.json"),
                                      "--lock-id", "lock1010", "-o", str(tmp_path / "run")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "run" / "lockrun.json").exists()
        assert (tmp_path / "run" / "inloop_beat.csv").exists()

    def test_spectral_block_rejected(self, runner, tmp_path):
        result = runner.invoke(main, ["lock", golden_path("fig3_lock_1514.json"),
                                      "--lock-id", "lock1514", "-o", str(tmp_path / "run")])
        assert result.exit_code != 0
        assert "spectral" in result.output

    def test_unknown_lock_id(self, runner, tmp_path):
        result = runner.invoke(main, ["lock", golden_path("fig3_lock_1514.json"),
                                      "--lock-id", "nope", "-o", str(tmp_path / "run")])
        assert result.exit_code != 0


class TestCompareCommand:
    def test_round_trip_through_report(self, runner, tmp_path):
        run = runner.invoke(main, ["run", golden_path("chain_afc_606.json"),
                                   "-o", str(tmp_path / "out")])
        assert run.exit_code == 0
        result = runner.invoke(main, ["compare", str(tmp_path / "out" / "report.json")])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["overall_pass"]
