"""Tests for run configuration models and config files."""

import pytest

from relmesh.config import (
    build_config,
    dump_config,
    load_config,
    parse_bool,
    parse_config_text,
    parse_float_list,
    parse_int_list,
)
from relmesh.exceptions import ConfigError, ValidationError
from relmesh.models import RunConfig

SAMPLE = """\
# vortex accuracy run
case = vortex
cells = 80
flux = ES2          # entropy stable, second order
adapt.enabled = on
monitor.alpha = 20
monitor.sigma = rho
output.times = 0, 2, 4
"""


def test_parse_helpers():
    """Test scalar and list parsers."""
    assert parse_bool("ON") is True
    assert parse_bool("no") is False
    with pytest.raises(ValueError):
        parse_bool("maybe")
    assert parse_int_list("64, 32") == (64, 32)
    assert parse_float_list("0,0.5, 1") == (0.0, 0.5, 1.0)


def test_parse_config_text():
    """Test a well-formed file parses into RunConfig fields."""
    values, lines = parse_config_text(SAMPLE)
    assert values["case"] == "vortex"
    assert values["cells"] == (80,)
    assert values["flux"] == "es2"
    assert values["adapt_enabled"] is True
    assert values["monitor_alpha"] == 20.0
    assert values["output_times"] == (0.0, 2.0, 4.0)
    assert lines["cells"] == 3
    assert lines["output.times"] == 8


@pytest.mark.parametrize(
    "text,line,key",
    [
        ("case = vortex\ncells 40\n", 2, None),
        ("case = vortex\nresolution = 40\n", 2, "resolution"),
        ("case = vortex\ncfl = 0.4\ncfl = 0.3\n", 3, "cfl"),
        ("case = vortex\n\nadapt.mu = many\n", 3, "adapt.mu"),
    ],
)
def test_parse_config_errors_report_line(text, line, key):
    """Test malformed lines, unknown or repeated keys and bad values name the line."""
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert info.value.key == key
    assert f"line {line}" in str(info.value)


def test_invalid_value_reports_line():
    """Test RunConfig validation errors point back to the file line."""
    values, lines = parse_config_text("case = rp1\n# comment\nflux = roe\n")
    with pytest.raises(ConfigError) as info:
        build_config(values, lines)
    assert info.value.line == 3
    assert info.value.key == "flux"


def test_override_replaces_invalid_file_value():
    """Test a CLI override wins over the file value."""
    values, lines = parse_config_text("case = rp1\ncfl = 0.3\n")
    config = build_config(values, lines, {"cfl": 0.2, "flux": None})
    assert config.cfl == 0.2
    assert config.flux == "es2"


def test_override_error_has_no_line():
    """Test an invalid override is reported without a file line."""
    values, lines = parse_config_text("case = rp1\ncfl = 0.3\n")
    with pytest.raises(ConfigError) as info:
        build_config(values, lines, {"cfl": 2.0})
    assert info.value.line is None


def test_case_is_required():
    """Test a config without a case is rejected."""
    with pytest.raises(ConfigError):
        build_config({"cfl": 0.4}, {})


def test_run_config_validation():
    """Test RunConfig rejects out-of-range settings."""
    with pytest.raises(ConfigError):
        RunConfig(case="vortex", cells=(2,))
    with pytest.raises(ConfigError):
        RunConfig(case="vortex", rk="rk4")
    with pytest.raises(ConfigError):
        RunConfig(case="vortex", t_final=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(case="vortex", monitor_sigma="p")
    with pytest.raises(ValidationError):
        RunConfig(case="vortex", output_every=-1)


def test_with_overrides_skips_none():
    """Test overrides ignore None values."""
    config = RunConfig(case="vortex", cells=(40,))
    updated = config.with_overrides(cells=(80,), flux=None, vcl="vcl2")
    assert updated.cells == (80,)
    assert updated.flux == "es2"
    assert updated.vcl == "vcl2"
    assert config.cells == (40,)


def test_load_and_dump_roundtrip(tmp_path):
    """Test a dumped config loads back to the same settings."""
    path = tmp_path / "run.cfg"
    path.write_text(SAMPLE)
    config = load_config(path, {"rk": "rk3"})
    assert config.rk == "rk3"

    again = tmp_path / "again.cfg"
    again.write_text(dump_config(config))
    assert load_config(again) == config
