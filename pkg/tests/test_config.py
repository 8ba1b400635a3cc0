import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conediff.config import KEYS, ConfigError, load_config, parse_config

MINIMAL = "cone.theta1 = 1.5\ncone.theta2 = 0\ninit.type = arc\ninit.radius = 1\n"


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.cone.theta1 == 1.5 and cfg.cone.theta2 == 0.0
    assert cfg.flow.m == 1 and cfg.flow.N == 200
    assert cfg.flow.t_end is None and cfg.flow.dt0 is None
    assert cfg.output.record_every == 1
    assert cfg.checks.enable_bounds


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + MINIMAL + "flow.N = 64  # coarse\n")
    assert cfg.flow.N == 64


def _line_of(exc):
    return exc.value.line


def test_bad_angle_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("cone.theta1 = 3.5\ncone.theta2 = 0\ninit.type = arc\ninit.radius = 1\n")
    assert _line_of(exc) == 1
    assert "theta1" in str(exc.value)


def test_duplicate_key_reports_later_line():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL + "flow.N = 10\nflow.m = 1\nflow.N = 20\n")
    assert _line_of(exc) == 7
    assert "line 5" in str(exc.value)


def test_unknown_key():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL + "flow.speed = 3\n")
    assert _line_of(exc) == 5


@pytest.mark.parametrize(
    "extra",
    [
        "flow.N = ten\n",
        "flow.m = 3\n",
        "flow.N = 4\n",
        "flow.dt0 = -1\n",
        "flow.t_end = -1\n",
        "flow.dt_min = 1\nflow.dt_max = 0.1\n",
        "flow.tol_step = nan\n",
        "checks.enable_bounds = maybe\n",
        "output.record_every = 0\n",
        "flow.remesh_ratio = 1\n",
        "no equals sign\n",
    ],
)
def test_invalid_values(extra):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + extra)


@pytest.mark.parametrize(
    "text",
    [
        "cone.theta1 = 1\ncone.theta2 = 0\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = arc\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = arc\ninit.radius = 1\ninit.area = 1\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = spiral\ninit.radius = 1\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = perturbed\ninit.radius = 1\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = perturbed\ninit.radius = 1\ninit.modes = 1:0.7, 2:0.3\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = perturbed\ninit.radius = 1\ninit.modes = 1-0.1\n",
        "cone.theta1 = 1\ncone.theta2 = 0\ninit.type = file\n",
    ],
)
def test_invalid_init(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_modes_and_overrides():
    text = MINIMAL.replace("init.type = arc", "init.type = perturbed") + "init.modes = 1:0.05, 3:-0.01\n"
    cfg = parse_config(text, {"flow.N": "50", "init.modes": "2:0.1"})
    assert cfg.init.modes == ((2, 0.1),)
    assert cfg.flow.N == 50
    with pytest.raises(ConfigError):
        parse_config(text, {"flow.nope": "1"})


def test_t_end_zero_is_allowed():
    assert parse_config(MINIMAL + "flow.t_end = 0\n").flow.t_end == 0.0


@given(st.floats(1e-12, 1e12), st.sampled_from(["flow.dt0", "flow.tol_step", "checks.tol_A", "flow.k2_cap"]))
def test_numbers_round_trip(value, key):
    cfg = parse_config(MINIMAL + f"{key} = {value!r}\n")
    section, name = key.split(".")
    assert getattr(getattr(cfg, section), name) == value


def test_every_key_is_dotted():
    assert all(k.count(".") == 1 for k in KEYS)


def test_load_config_resolves_relative_path(tmp_path):
    p = tmp_path / "run.conf"
    p.write_text("cone.theta1 = 1\ncone.theta2 = 0\ninit.type = file\ninit.path = start.json\n")
    cfg = load_config(p)
    assert cfg.init.path == str(tmp_path / "start.json")


def test_shipped_configs_parse():
    import os

    root = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
    names = sorted(f for f in os.listdir(root) if f.endswith(".conf"))
    assert names
    for name in names:
        cfg = load_config(os.path.join(root, name))
        assert 0 <= cfg.cone.theta2 < cfg.cone.theta1 < math.pi
