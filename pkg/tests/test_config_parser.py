from unittest.mock import patch

import pytest

from repeaterlab.services.codes import CodeFamily
from repeaterlab.utils.config_parser import (
    ConfigError,
    ExperimentSettings,
    Subcommand,
    dump_config,
    load_config,
    parse_config,
)

# -----------------------------------------------
# 1. Defaults and Grids
# -----------------------------------------------
def test_minimal_config_gets_canonical_defaults():
    run, configs = parse_config('code=[3,1,3]\n')
    assert run.subcommand == Subcommand.RATE_SWEEP
    assert len(configs) == 1
    cfg = configs[0]
    assert cfg.code.label == "[3,1,3]"
    assert (cfg.total_distance_km, cfg.segment_km, cfg.attenuation_length_km) == (1280.0, 20.0, 25.5)
    assert cfg.rounds == 2
    assert cfg.hardware.fiber_speed_m_per_s == 2e8

def test_empty_config_uses_default_code():
    run, configs = parse_config("")
    assert run.settings == ExperimentSettings()
    assert [cfg.code.label for cfg in configs] == ["[3,1,3]"]

def test_list_keys_span_the_grid():
    text = "code=[3,1,3] [7,1,3], unencoded\nk=0,1,2\ntau_c=0.01 0.1\n"
    run, configs = parse_config(text)
    assert run.settings.code == ["[3,1,3]", "[7,1,3]", "unencoded"]
    assert len(configs) == 3 * 3 * 2
    assert {cfg.code.family for cfg in configs} == {CodeFamily.REPETITION, CodeFamily.CSS}
    assert sorted({cfg.rounds for cfg in configs}) == [0, 1, 2]

def test_fidelity_grid_defaults_and_explicit_values():
    run, _ = parse_config("")
    grid = run.settings.fidelity_grid()
    assert len(grid) == 45
    assert grid[0] == pytest.approx(0.55)
    assert grid[-1] == pytest.approx(0.99)
    run, _ = parse_config("F=0.9, 0.95")
    assert run.settings.fidelity_grid() == [0.9, 0.95]

def test_alpha_theta_input_replaces_the_grid():
    run, configs = parse_config("alpha=100\ntheta=0.01\n")
    grid = run.settings.fidelity_grid()
    assert len(grid) == 1
    assert grid[0] == pytest.approx(configs[0].initial_fidelity())

def test_quoted_values_and_comments():
    run, _ = parse_config('# encoding comparison\ncode="[7,1,3]"\ntarget=0.9  # relaxed\n')
    assert run.settings.code == ["[7,1,3]"]
    assert run.settings.target == 0.9

def test_gate_error_logged_at_load_time():
    with patch("repeaterlab.utils.config_parser.logger") as mock_logger:
        parse_config("tau_c=0.1\none_minus_T=0.001\n")
        info_calls = [call for call in mock_logger.info.call_args_list if "q_g=0.0007852" in str(call)]
        assert len(info_calls) == 1

# -----------------------------------------------
# 2. Diagnostics
# -----------------------------------------------
def test_unknown_key_is_rejected_with_line():
    with patch("repeaterlab.utils.config_parser.logger") as mock_logger:
        with pytest.raises(ConfigError) as exc_info:
            parse_config("code=[3,1,3]\nspeed=3\n")
        assert str(exc_info.value) == "line 2: unknown key 'speed'"
        error_calls = [call for call in mock_logger.error.call_args_list if "unknown key" in str(call)]
        assert len(error_calls) > 0

def test_non_power_of_two_segments():
    with pytest.raises(ConfigError) as exc_info:
        parse_config("L0=30\nL=1280\n")
    message = str(exc_info.value)
    assert message.startswith("line 1:")
    assert "42.67" in message
    assert "not an integral power of two" in message

@pytest.mark.parametrize("text, fragment", [
    ("k=-1", "line 1: k:"),
    ("target=1.5", "line 1: target:"),
    ("code=[5,1,3]", "line 1: code:"),
    ("code=[3,1,3] steane", "unrecognized code text"),
    ("tau_c=0", "line 1: tau_c:"),
    ("F=0.4", "line 1: F:"),
    ("alpha=100", "alpha and theta must be given together"),
    ("F_min=0.9\nF_max=0.8", "F_min must not exceed F_max"),
    ("L0=", "missing value"),
])
def test_bad_values_are_reported(text, fragment):
    with pytest.raises(ConfigError) as exc_info:
        parse_config(text)
    assert fragment in str(exc_info.value)

def test_config_error_is_a_value_error():
    with pytest.raises(ValueError):
        parse_config("bogus=1")

# -----------------------------------------------
# 3. Overrides
# -----------------------------------------------
def test_overrides_apply_after_file():
    run, configs = parse_config("L0=20\n", overrides=("L0=40", "code=[7,1,3]"))
    assert configs[0].segment_km == 40.0
    assert configs[0].segments == 32
    assert run.overrides == ("L0=40", "code=[7,1,3]")

def test_override_diagnostics_name_the_override():
    with pytest.raises(ConfigError) as exc_info:
        parse_config("", overrides=("L0=30",))
    assert str(exc_info.value).startswith("override L0:")
    with pytest.raises(ConfigError) as exc_info:
        parse_config("", overrides=("L0",))
    assert "expected key=value" in str(exc_info.value)

# -----------------------------------------------
# 4. Files and Round Trip
# -----------------------------------------------
def test_load_config_reads_file(tmp_path):
    path = tmp_path / "encoding.env"
    path.write_text("code=[7,1,3]\nk=0,1,2\n", encoding="utf-8")
    run, configs = load_config(path, subcommand=Subcommand.FIDELITY)
    assert run.config_path == path
    assert run.subcommand == Subcommand.FIDELITY
    assert len(configs) == 3

def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc_info:
        load_config(tmp_path / "missing.env")
    assert "cannot read config file" in str(exc_info.value)

def test_load_config_without_file_uses_defaults():
    run, configs = load_config(None)
    assert run.config_path is None
    assert len(configs) == 1

def test_dump_of_defaults_round_trips():
    settings = ExperimentSettings()
    run, configs = parse_config(dump_config(settings))
    assert run.settings == settings
    assert configs == settings.protocol_configs()

def test_dump_of_custom_settings_round_trips():
    text = "code=[3,1,3] [23,1,7]\nk=1,2\ntau_c=0.01, 1.0\none_minus_T=0.0001\nF=0.9, 0.95\nseed=7\n"
    run, configs = parse_config(text)
    again, configs_again = parse_config(dump_config(run.settings))
    assert again.settings == run.settings
    assert configs_again == configs
