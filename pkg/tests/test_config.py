import pytest

from rps.config import Config, load_config
from rps.errors import ConfigError, IoFailure


def test_defaults_load_without_a_file():
    config = load_config(None)
    assert config.k == 3
    assert config.threshold == 0.7
    assert config.pipeline == "baseline"
    assert config.degrade_gracefully is False
    assert config.max_suggestions == 1
    assert config.embedding_dim == 256
    assert (config.host, config.port) == ("127.0.0.1", 8080)


def test_yaml_overrides_nest_into_dotted_keys(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        "retrieval:\n  k: 5\n  threshold: 0.6\n"
        "generation:\n  pipeline: cove\n"
        "degrade_gracefully: true\n",
        encoding="utf-8")
    config = load_config(path)
    assert config.k == 5
    assert config.threshold == 0.6
    assert config.pipeline == "cove"
    assert config.degrade_gracefully is True
    assert config.port == 8080  # untouched default


def test_unknown_keys_are_reachable_via_get(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("extras:\n  team: support\n", encoding="utf-8")
    config = load_config(path)
    assert config.get("extras.team") == "support"
    assert config.get("no.such.key", "fallback") == "fallback"


@pytest.mark.parametrize("yaml_text,fragment", [
    ("retrieval:\n  threshold: 1.5\n", "threshold"),
    ("retrieval:\n  k: 0\n", "k"),
    ("generation:\n  pipeline: telepathy\n", "pipeline"),
    ("server:\n  port: 99999\n", "port"),
    ("suggestions:\n  max: 0\n", "max"),
])
def test_validation_rejects_bad_values(tmp_path, yaml_text, fragment):
    path = tmp_path / "config.yaml"
    path.write_text(yaml_text, encoding="utf-8")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert fragment in str(err.value)


def test_bad_yaml_and_missing_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("retrieval: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(IoFailure):
        load_config(tmp_path / "absent.yaml")


def test_empty_file_is_pure_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config(path).k == Config({}).k
