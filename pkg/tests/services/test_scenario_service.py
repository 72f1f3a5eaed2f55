"""Tests for built-in scenarios and TOML preset files."""

from pathlib import Path

import pytest

from jfts_am.core.exceptions import InvalidArgumentError
from jfts_am.services import scenario_service

PRESET_FILE = Path(__file__).resolve().parents[2] / "presets" / "indoor.toml"


class TestBuiltins:
    def test_wall_scenarios(self):
        for name in scenario_service.WALL_SCENARIOS:
            assert name in scenario_service.BUILTIN_PRESETS

    def test_same_room_values(self):
        preset = scenario_service.BUILTIN_PRESETS["same-room"]
        assert (preset.K_dB, preset.Sh_dB, preset.delta) == (13.0, 12.0, 0.9)

    def test_walls_lower_both_factors(self):
        presets = [scenario_service.BUILTIN_PRESETS[n] for n in scenario_service.WALL_SCENARIOS]
        assert [p.K_dB for p in presets] == sorted((p.K_dB for p in presets), reverse=True)
        assert [p.Sh_dB for p in presets] == sorted((p.Sh_dB for p in presets), reverse=True)


class TestResolve:
    def test_by_name(self):
        assert scenario_service.resolve_scenario("one-wall").K_dB == 10.0

    def test_case_insensitive(self):
        assert scenario_service.resolve_scenario("  Same-Room ").name == "same-room"

    def test_inline(self):
        preset = scenario_service.resolve_scenario(inline=(9.0, 3.0, 0.6))
        assert preset.name == "inline-9-3-0.6"
        assert preset.to_params().delta == 0.6

    def test_inline_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            scenario_service.resolve_scenario(inline=(9.0, 3.0, 1.2))

    def test_unknown_lists_names(self):
        with pytest.raises(InvalidArgumentError) as exc_info:
            scenario_service.resolve_scenario("four-walls")
        message = str(exc_info.value)
        assert "four-walls" in message
        for name in scenario_service.WALL_SCENARIOS:
            assert name in message

    def test_name_and_inline(self):
        with pytest.raises(InvalidArgumentError):
            scenario_service.resolve_scenario("same-room", inline=(1.0, 1.0, 0.1))

    def test_neither(self):
        with pytest.raises(InvalidArgumentError):
            scenario_service.resolve_scenario()


class TestPresetFiles:
    def test_shipped_file(self):
        presets = scenario_service.load_presets(PRESET_FILE)
        assert presets["corridor"].K_dB == 9.0
        assert presets["same-room-tight"].P1 == pytest.approx(0.0238)

    def test_overlay(self):
        presets = scenario_service.available_presets(PRESET_FILE)
        assert "corridor" in presets and "same-room" in presets

    def test_resolve_from_file(self):
        assert scenario_service.resolve_scenario("corridor", preset_file=PRESET_FILE).delta == 0.6

    def test_file_overrides_builtin(self, tmp_path):
        path = tmp_path / "override.toml"
        path.write_text("[same-room]\nK_dB = 20\nSh_dB = 12\ndelta = 0.9\n")
        assert scenario_service.resolve_scenario("same-room", preset_file=path).K_dB == 20.0

    def test_settings_file(self, tmp_path, monkeypatch):
        path = tmp_path / "lab.toml"
        path.write_text("[lab]\nK_dB = 5\nSh_dB = 1\ndelta = 0.2\n")
        monkeypatch.setattr(scenario_service.settings, "PRESET_FILE", str(path))
        assert "lab" in scenario_service.available_presets()

    @pytest.mark.parametrize(
        "content",
        [
            "[bad\n",
            "name = 3\n",
            "[lab]\nK_dB = 5\nSh_dB = 1\n",
            "[lab]\nK_dB = 5\nSh_dB = 1\ndelta = 0.2\ncolour = 'red'\n",
            "[lab]\nK_dB = 5\nSh_dB = 1\ndelta = 2\n",
        ],
    )
    def test_invalid_files(self, tmp_path, content):
        path = tmp_path / "bad.toml"
        path.write_text(content)
        with pytest.raises(InvalidArgumentError):
            scenario_service.load_presets(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            scenario_service.load_presets(tmp_path / "nope.toml")
