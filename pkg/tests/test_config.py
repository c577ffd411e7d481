"""Configuration and random stream tests"""
import pytest

from wayfarer import config as cfg
from wayfarer import streams


def write(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text)
    return str(path)


def test_defaults_apply_without_a_file():
    config = cfg.Config()
    assert config["replanning.maxPlans"] == 5
    assert config["modeChoice.epsilon"] == 1.0
    assert config.iterations == 10


def test_file_overrides_defaults_and_set_overrides_file(tmp_path):
    path = write(tmp_path, "agents:\n  rideHail:\n    maxWaitingTimeInSec: 600\n")
    assert cfg.Config.load(path)["agents.rideHail.maxWaitingTimeInSec"] == 600
    config = cfg.Config.load(
            path, ["agents.rideHail.maxWaitingTimeInSec=120"])
    assert config["agents.rideHail.maxWaitingTimeInSec"] == 120
    assert config["agents.rideHail.maxRequestsPerVehicle"] == 4


def test_only_unknown_keys_are_warned_about(tmp_path, caplog):
    path = write(tmp_path, "modeChoice:\n  asc:\n    CAR: 1.5\n"
                           "  votMultiplier:\n    WALK: 2.0\n"
                           "  epsilom: 3.0\n")
    with caplog.at_level("WARNING", logger="wayfarer.config"):
        config = cfg.Config.load(path)
    assert config["modeChoice.asc.CAR"] == 1.5
    assert config["modeChoice.epsilom"] == 3.0
    warned = [r.getMessage() for r in caplog.records]
    assert warned == ["unrecognised configuration key modeChoice.epsilom"]


@pytest.mark.parametrize(
        "text, key, value", [
            ("modeChoice.epsilon=0.5", "modeChoice.epsilon", 0.5),
            ("outputs.modeChoiceSvg=true", "outputs.modeChoiceSvg", True),
            ("seed=7", "seed", 7),
            ("modeChoice.asc.CAR=-1", "modeChoice.asc.CAR", -1),
        ])
def test_override_values_are_typed(text, key, value):
    config = cfg.Config()
    config.set(*cfg.parse_override(text))
    assert config[key] == value


def test_unknown_section_is_rejected(tmp_path):
    with pytest.raises(cfg.ConfigError):
        cfg.Config.load(write(tmp_path, "nonsense:\n  a: 1\n"))


def test_unknown_leaf_is_kept(tmp_path):
    config = cfg.Config.load(write(tmp_path, "physsim:\n  extra: 3\n"))
    assert config["physsim.extra"] == 3


@pytest.mark.parametrize("text", ["no-equals-sign", ""])
def test_malformed_override(text):
    with pytest.raises(cfg.ConfigError):
        cfg.parse_override(text)


def test_missing_file_and_key():
    with pytest.raises(cfg.ConfigError):
        cfg.Config.load("/nonexistent/config.yaml")
    with pytest.raises(cfg.ConfigError):
        _ = cfg.Config()["physsim.noSuchKey"]


def test_paths_resolve_against_the_config_file(tmp_path):
    config = cfg.Config.load(write(tmp_path, "inputDirectory: scenario\n"))
    assert config.path("inputDirectory") == str(tmp_path / "scenario")


def test_streams_repeat_for_the_same_keys():
    a = streams.stream(42, "person", "p1", 3).random(5)
    b = streams.stream(42, "person", "p1", 3).random(5)
    assert list(a) == list(b)


@pytest.mark.parametrize(
        "keys", [
            (43, "person", "p1", 3),
            (42, "person", "p2", 3),
            (42, "person", "p1", 4),
            (42, "vehicle", "p1", 3),
        ])
def test_streams_differ_when_any_key_differs(keys):
    base = streams.stream(42, "person", "p1", 3).random(5)
    assert list(streams.stream(*keys).random(5)) != list(base)
