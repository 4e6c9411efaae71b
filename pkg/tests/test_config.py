import math

import pytest

from listflow.config import ConfigError, parse_config, parse_config_text


def test_minimal_config_defaults():
    m = parse_config_text("scenario = flat_bump_u\ngrid = 32x32\nt_end = 1.0\n")
    c = m.config
    assert (c.cfl, c.integrator, c.order, c.deturck, c.mu) == (0.2, "rk4", 2, True, "auto")
    assert m.grid.sizes == (32, 32) and m.grid.periods == (2 * math.pi,) * 2
    assert str(m.out) == "records.csv" and m.checkpoint is None


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nscenario = coupled\ngrid = 16x16\nt_end = 0.5  # trailing\ncfl = 0.3\n")
    m = parse_config(path, {"cfl": "0.1", "deturck": "off", "mu": "7.5"})
    assert m.config.cfl == 0.1 and m.config.deturck is False and m.config.mu == 7.5
    assert m.config.t_end == 0.5


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="cflx"):
        parse_config_text("scenario = coupled\ngrid = 16x16\nt_end = 1\ncflx = 0.1\n")


@pytest.mark.parametrize("text", [
    "grid = 16x16\nt_end = 1\n",
    "scenario = coupled\ngrid = 16x16\nt_end = 1\ncfl = fast\n",
    "scenario = unknown\ngrid = 16x16\nt_end = 1\n",
    "scenario = coupled\ngrid = 16x16\nt_end = 1\norder = 3\n",
    "scenario = coupled\ngrid = 16x16\nt_end = 1\ncheckpoint_every = 5\n",
    "scenario = coupled\ngrid = 4x4\nt_end = 1\n",
    "scenario = coupled\ngrid 16x16\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_manifest_as_dict():
    m = parse_config_text("scenario = coupled\ngrid = 16x16\nt_end = 1\n")
    d = m.as_dict()
    assert d["grid"] == "16x16" and d["scenario"] == "coupled" and d["mu"] == "auto"
