"""Command-line interface tests (mostly in-process via main())."""

import json

import pytest

from teleportsim.cli import main

_RUN_BASE = [
    "run", "--scheme", "typical", "--b2", "0.25",
    "--alpha", "0.6", "--beta", "0.8",
    "--trials", "2000", "--seed", "42",
]


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRun:
    def test_table_output(self, capsys, compiled_backends):
        code, out, err = _run(capsys, _RUN_BASE)
        assert code == 0 and err == ""
        assert "analytic success       0.5" in out
        assert "phi+/m0" in out

    def test_json_schema_and_values(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, _RUN_BASE + ["--format", "json"])
        assert code == 0
        report = json.loads(out)
        assert list(report) == [
            "scheme", "channels", "input", "trials", "seed",
            "exact_success", "analytic_success", "empirical_success",
            "mean_success_fidelity", "per_outcome",
        ]
        assert report["exact_success"] == 0.5
        assert report["channels"] == [{"a2": 0.75, "b2": 0.25, "b_phase": 0.0}]
        assert len(report["per_outcome"]) == 8

    def test_json_is_deterministic(self, capsys, compiled_backends):
        _, first, _ = _run(capsys, _RUN_BASE + ["--format", "json"])
        _, second, _ = _run(capsys, _RUN_BASE + ["--format", "json"])
        assert first == second

    def test_csv_output(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, _RUN_BASE + ["--format", "csv"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "label,exact,empirical"
        assert len(lines) == 9

    def test_relay_flags(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, [
            "run", "--scheme", "relay-assistant", "--d2", "0.3", "--f2", "0.2",
            "--alpha", "0.6", "--beta", "0.8", "--trials", "2000", "--seed", "1",
            "--format", "json",
        ])
        assert code == 0
        assert json.loads(out)["analytic_success"] == 0.24

    def test_amplitudes_renormalized(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, [
            "run", "--scheme", "typical", "--b2", "0.25",
            "--alpha", "3", "--beta", "4", "--trials", "1", "--seed", "1",
            "--dump-config",
        ])
        assert code == 0
        assert json.loads(out)["input"]["alpha_re"] == pytest.approx(0.6)


class TestRunErrors:
    def test_out_of_range_b2(self, capsys):
        code, _, err = _run(capsys, [
            "run", "--scheme", "typical", "--b2", "0.6",
            "--alpha", "0.6", "--beta", "0.8",
        ])
        assert code == 1
        assert "b2 must lie in (0, 0.5]" in err

    def test_missing_input(self, capsys):
        code, _, err = _run(capsys, ["run", "--scheme", "typical", "--b2", "0.25"])
        assert code == 1
        assert "--alpha" in err

    def test_relay_scheme_rejects_single_hop_flag(self, capsys):
        code, _, err = _run(capsys, [
            "run", "--scheme", "relay-endpoints", "--b2", "0.2",
            "--alpha", "0.6", "--beta", "0.8",
        ])
        assert code == 1
        assert "--d2" in err

    def test_unknown_subcommand(self, capsys):
        code, _, _ = _run(capsys, ["transmogrify"])
        assert code == 1

    def test_zero_input_rejected(self, capsys):
        code, _, err = _run(capsys, [
            "run", "--scheme", "typical", "--b2", "0.25",
            "--alpha", "0", "--beta", "0",
        ])
        assert code == 1
        assert "zero" in err


class TestConfigFile:
    def test_round_trip(self, capsys, tmp_path, compiled_backends):
        code, dumped, _ = _run(capsys, _RUN_BASE + ["--dump-config"])
        assert code == 0
        path = tmp_path / "scenario.json"
        path.write_text(dumped)
        _, from_flags, _ = _run(capsys, _RUN_BASE + ["--format", "json"])
        code, from_file, _ = _run(
            capsys, ["run", "--config", str(path), "--format", "json"]
        )
        assert code == 0
        assert from_file == from_flags

    def test_a2_channel_spelling(self, capsys, tmp_path, compiled_backends):
        config = {
            "scheme": "typical",
            "channels": [{"a2": 0.75}],
            "input": {"alpha_re": 0.6, "alpha_im": 0.0, "beta_re": 0.8, "beta_im": 0.0},
            "trials": 500,
            "seed": 9,
        }
        path = tmp_path / "a2.json"
        path.write_text(json.dumps(config))
        code, out, _ = _run(capsys, ["run", "--config", str(path), "--format", "json"])
        assert code == 0
        assert json.loads(out)["channels"][0]["b2"] == 0.25

    def test_random_input_spellings(self, capsys, tmp_path, compiled_backends):
        for spelled, expected in (("\"random\"", "random"), ("{\"random\": 7}", {"random": 7})):
            path = tmp_path / "r.json"
            path.write_text(
                '{"scheme": "typical", "channels": [{"b2": 0.25}], '
                f'"input": {spelled}, "trials": 100, "seed": 1}}'
            )
            code, out, _ = _run(capsys, ["run", "--config", str(path), "--format", "json"])
            assert code == 0
            assert json.loads(out)["input"] == expected

    def test_conflicting_sources_rejected(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{}")
        code, _, err = _run(capsys, _RUN_BASE + ["--config", str(path)])
        assert code == 1
        assert "either --config or inline" in err

    def test_diagnostics_name_the_field(self, capsys, tmp_path):
        bad = {
            "scheme": "typical",
            "channels": [{"a2": 0.75, "b2": 0.25}],
            "input": "random",
            "trials": 100,
            "seed": 1,
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        code, _, err = _run(capsys, ["run", "--config", str(path)])
        assert code == 1
        assert "channels[0]" in err

    def test_missing_file(self, capsys):
        code, _, err = _run(capsys, ["run", "--config", "/nonexistent/x.json"])
        assert code == 1
        assert "cannot read config" in err


class TestSweep:
    def test_single_hop_grid(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, [
            "sweep", "--scheme", "typical", "--b2-grid", "0.1:0.5:0.1",
            "--alpha", "0.6", "--beta", "0.8", "--trials", "2000", "--seed", "7",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == (
            "b2,analytic_success,exact_success,empirical_success,mean_success_fidelity"
        )
        assert len(lines) == 6
        for line in lines[1:]:
            b2, analytic, exact = line.split(",")[:3]
            assert float(analytic) == pytest.approx(2 * float(b2), abs=1e-12)
            assert float(exact) == pytest.approx(2 * float(b2), abs=1e-10)

    def test_relay_grid_at_half_d2(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, [
            "sweep", "--scheme", "relay-endpoints", "--d2", "0.5",
            "--f2-grid", "0.1:0.3:0.1",
            "--alpha", "0.6", "--beta", "0.8", "--trials", "2000", "--seed", "7",
        ])
        assert code == 0
        for line in out.strip().splitlines()[1:]:
            f2, analytic = (float(x) for x in line.split(",")[:2])
            assert analytic == pytest.approx(2 * f2, abs=1e-12)

    def test_grid_outside_range_rejected(self, capsys):
        code, _, err = _run(capsys, [
            "sweep", "--scheme", "typical", "--b2-grid", "0.4:0.8:0.1",
            "--alpha", "0.6", "--beta", "0.8",
        ])
        assert code == 1
        assert "b2 must lie in (0, 0.5]" in err

    def test_malformed_grid_rejected(self, capsys):
        for grid in ("0.1:0.5", "a:b:c", "0.3:0.1:0.1", "0.1:0.5:-0.1"):
            code, _, err = _run(capsys, [
                "sweep", "--scheme", "typical", "--b2-grid", grid,
                "--alpha", "0.6", "--beta", "0.8",
            ])
            assert code == 1, grid

    def test_deterministic(self, capsys, compiled_backends):
        argv = [
            "sweep", "--scheme", "sender-povm", "--b2-grid", "0.2:0.4:0.1",
            "--random-input", "3", "--trials", "1000", "--seed", "5",
        ]
        _, first, _ = _run(capsys, argv)
        _, second, _ = _run(capsys, argv)
        assert first == second


class TestVerify:
    def test_fast_level_passes(self, capsys):
        code, out, _ = _run(capsys, ["verify", "--level", "fast"])
        assert code == 0
        lines = out.strip().splitlines()
        assert all(line.startswith("PASS") for line in lines[:-1])
        assert lines[-1] == "12/12 checks passed"

    def test_full_level_passes(self, capsys, compiled_backends):
        code, out, _ = _run(capsys, ["verify", "--level", "full"])
        assert code == 0
        assert "16/16 checks passed" in out
