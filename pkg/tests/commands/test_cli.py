"""Tests for the jfts-am command line."""

import json

import pytest

from jfts_am.core.exceptions import InfeasiblePlanError
from jfts_am.main import run
from jfts_am.models.enums import CheckStatus
from jfts_am.services import policy_service
from jfts_am.services.verify_service import AcceptanceCheck, AcceptanceSuite


def _data_lines(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


class TestUsage:
    def test_help(self, capsys):
        assert run(["--help"]) == 0
        assert "sweep" in capsys.readouterr().out

    def test_missing_subcommand(self, capsys):
        assert run([]) == 2

    def test_bad_flag(self, capsys):
        assert run(["sweep", "--scenario", "same-room", "--snr", "10", "--bogus"]) == 2

    def test_scenario_and_channel_are_exclusive(self, capsys):
        assert run(["pdf", "--scenario", "same-room", "--channel", "9,3,0.6", "--snr", "10"]) == 2

    def test_unknown_scenario(self, capsys):
        assert run(["sweep", "--scenario", "four-walls", "--snr", "10"]) == 2
        err = capsys.readouterr().err
        assert "four-walls" in err
        assert "same-room" in err and "three-walls" in err

    def test_unknown_policy(self, capsys):
        assert run(["sweep", "--scenario", "same-room", "--snr", "10", "--policy", "greedy"]) == 2
        assert "arate-apow-iber" in capsys.readouterr().err

    def test_target_ber_out_of_range(self, capsys):
        assert run(["sweep", "--scenario", "same-room", "--snr", "10", "--tber", "0.3"]) == 2

    def test_unordered_grid(self, capsys):
        assert run(["sweep", "--scenario", "same-room", "--snr", "20,10"]) == 2

    def test_plan_needs_single_point(self, capsys):
        args = ["plan", "--scenario", "same-room", "--policy", "all", "--tber", "1e-3", "--snr", "20"]
        assert run(args) == 2

    @pytest.mark.parametrize(
        "flag, values",
        [
            ("--snr", "10,20"),
            ("--tber", "1e-3,1e-6"),
            ("--policy", "arate-cpow-iber,crate-apow-iber"),
        ],
    )
    def test_plan_rejects_several_values(self, capsys, flag, values):
        args = {"--scenario": "same-room", "--policy": "arate-apow-iber", "--tber": "1e-3", "--snr": "20"}
        args[flag] = values
        assert run(["plan", *[item for pair in args.items() for item in pair]]) == 2
        assert "exactly one" in capsys.readouterr().err


class TestPresets:
    def test_lists_builtins(self, capsys):
        assert run(["presets"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "name,K_dB,Sh_dB,delta,source"
        assert any(line.startswith("same-room,13,12,0.9,builtin") for line in lines)

    def test_preset_file(self, capsys, tmp_path):
        path = tmp_path / "lab.toml"
        path.write_text("[lab]\nK_dB = 5\nSh_dB = 1\ndelta = 0.2\n")
        assert run(["--preset-file", str(path), "presets"]) == 0
        assert "lab,5,1,0.2,file" in capsys.readouterr().out

    def test_lists_reference_presets(self, capsys):
        assert run(["presets"]) == 0
        names = [line.split(",")[0] for line in capsys.readouterr().out.splitlines()[1:]]
        assert {"fig3-same-room", "fig3-2-3-walls"} <= set(names)


class TestPlan:
    def test_reference_preset(self, capsys):
        args = ["plan", "--scenario", "fig3-same-room", "--policy", "arate-apow-iber", "--tber", "1e-3",
                "--snr", "20"]
        assert run(args) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["metadata"]["scenario"] == "fig3-same-room"
        assert document["power_law"] == "inversion"

    def test_json_document(self, capsys):
        args = ["plan", "--scenario", "same-room", "--policy", "arate-apow-iber", "--tber", "1e-3",
                "--snr", "20", "--no-closed-form-check"]
        assert run(args) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["kind"] == "arate_apow_iber"
        assert document["power_law"] == "inversion"
        assert document["lambda"] > 0.0
        assert document["boundaries"] == sorted(document["boundaries"])
        assert document["metadata"]["scenario"] == "same-room"
        assert 0.0 < document["metadata"]["ase_analytic"] <= 8.0

    def test_tail_reading(self, capsys):
        args = ["plan", "--channel", "13,12,0.9", "--policy", "arate_cpow_iber", "--tber", "1e-3",
                "--snr", "20", "--reading", "tail", "--no-closed-form-check"]
        assert run(args) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["metadata"]["scenario"] == "inline-13-12-0.9"

    def test_infeasible_exits_one(self, capsys, monkeypatch):
        def infeasible(*args, **kwargs):
            raise InfeasiblePlanError("no SNR mass above the cutoff")

        monkeypatch.setattr(policy_service, "solve", infeasible)
        args = ["plan", "--scenario", "three-walls", "--policy", "crate-apow-iber", "--tber", "1e-6",
                "--snr", "0"]
        assert run(args) == 1
        assert "no SNR mass" in capsys.readouterr().err

    def test_writes_output_file(self, capsys, tmp_path):
        out = tmp_path / "plan.json"
        args = ["plan", "--scenario", "one-wall", "--policy", "crate-apow-iber", "--tber", "1e-3",
                "--snr", "20", "--no-closed-form-check", "--out", str(out)]
        assert run(args) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(out.read_text())["modes"] == [8]


class TestSweep:
    def test_all_policies(self, capsys):
        assert run(["sweep", "--scenario", "same-room", "--snr", "10:30:10"]) == 0
        rows = _data_lines(capsys.readouterr().out)
        assert rows[0].startswith("policy,scenario,tber,gamma_bar_db,ase_analytic")
        assert len(rows) == 1 + 4 * 3

    def test_byte_identical_with_seed(self, capsys, tmp_path):
        outputs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            args = ["sweep", "--scenario", "one-wall", "--policy", "arate-cpow-iber", "--snr", "10,20",
                    "--mc", "10000", "--seed", "5", "--out", str(out)]
            assert run(args) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        assert b"# mc_samples: 10000" in outputs[0]
        assert b"# seed: 5" in outputs[0]


class TestDensityAndSamples:
    def test_pdf(self, capsys):
        assert run(["pdf", "--scenario", "two-walls", "--snr", "10,20", "--points", "50"]) == 0
        rows = _data_lines(capsys.readouterr().out)
        assert rows[0] == "gamma_bar_db,gamma,pdf,cdf"
        assert len(rows) == 1 + 2 * 50

    def test_pdf_rejects_bad_grid(self, capsys):
        assert run(["pdf", "--scenario", "two-walls", "--snr", "10", "--points", "1"]) == 2

    def test_sample(self, capsys):
        assert run(["sample", "--scenario", "same-room", "--snr", "20", "--count", "100", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        rows = _data_lines(out)
        assert rows[0] == "gamma_bar_db,snr"
        assert len(rows) == 101
        assert "# count: 100" in out


class TestVerify:
    """Exit codes of `verify` with canned suite outcomes."""

    @pytest.fixture
    def canned(self, monkeypatch):
        def install(*statuses):
            def fake_run(suite):
                suite.checks = [
                    AcceptanceCheck(3, f"check_{i}", status, 0.0, 0.0) for i, status in enumerate(statuses)
                ]
                return suite.checks

            monkeypatch.setattr(AcceptanceSuite, "run", fake_run)

        return install

    def test_all_pass(self, capsys, tmp_path, canned):
        canned(CheckStatus.PASS, CheckStatus.PASS)
        metrics_file = tmp_path / "jfts.prom"
        assert run(["verify", "--quick", "--metrics-out", str(metrics_file)]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "2 checks, 0 failed, 0 flagged"
        assert metrics_file.read_bytes().startswith(b"# HELP")

    def test_failure(self, capsys, canned):
        canned(CheckStatus.PASS, CheckStatus.FAIL)
        assert run(["verify", "--quick"]) == 1

    def test_flagged_only_fails_when_strict(self, capsys, canned):
        canned(CheckStatus.FLAGGED)
        assert run(["verify", "--quick"]) == 0
        assert run(["verify", "--quick", "--strict"]) == 1
