"""Tests for configuration loading and validation."""

import pytest

from fastlloyd.config.loader import (
    _substitute_env_vars,
    _walk_and_substitute,
    load_config,
    load_yaml,
    parse_flat,
)
from fastlloyd.config.models import (
    FastLloydConfig,
    PostProcessing,
    ProtocolParams,
    RadiusPolicy,
    SweepConfig,
    TransportConfig,
)
from fastlloyd.config.settings import get_settings
from fastlloyd.core.exceptions import ConfigurationError


class TestEnvSubstitution:
    def test_simple_var(self, monkeypatch):
        monkeypatch.setenv("TEST_VAR", "hello")
        assert _substitute_env_vars("${TEST_VAR}") == "hello"

    def test_var_with_default(self):
        assert _substitute_env_vars("${NONEXISTENT_VAR:fallback}") == "fallback"

    def test_no_substitution(self):
        assert _substitute_env_vars("plain text") == "plain text"

    def test_multiple_vars(self, monkeypatch):
        monkeypatch.setenv("A", "1")
        monkeypatch.setenv("B", "2")
        assert _substitute_env_vars("${A}-${B}") == "1-2"

    def test_walk_nested(self, monkeypatch):
        monkeypatch.setenv("FL_HOST", "server-0")
        data = {"transport": {"host": "${FL_HOST}", "port": 7070}, "items": ["${FL_HOST}", "x"]}
        result = _walk_and_substitute(data)
        assert result["transport"]["host"] == "server-0"
        assert result["items"][0] == "server-0"
        assert result["transport"]["port"] == 7070


class TestLoadYaml:
    def test_load_valid_yaml(self, tmp_path):
        yaml_file = tmp_path / "test.yaml"
        yaml_file.write_text("key: value\nnested:\n  a: 1\n")
        result = load_yaml(yaml_file)
        assert result["key"] == "value"
        assert result["nested"]["a"] == 1

    def test_load_empty_yaml(self, tmp_path):
        yaml_file = tmp_path / "empty.yaml"
        yaml_file.write_text("")
        assert load_yaml(yaml_file) == {}

    def test_non_mapping_rejected(self, tmp_path):
        yaml_file = tmp_path / "list.yaml"
        yaml_file.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError):
            load_yaml(yaml_file)


class TestFlatFormat:
    def test_bare_keys_are_params(self):
        parsed = parse_flat("k = 5\nepsilon = 0.5\ndelta = 1e-5\n")
        assert parsed == {"params": {"k": 5, "epsilon": 0.5, "delta": 1e-5}}

    def test_dotted_keys_are_sections(self):
        parsed = parse_flat("transport.port = 9000\nalgo = su  # comment\n")
        assert parsed["transport"]["port"] == 9000
        assert parsed["algo"] == "su"

    def test_missing_equals(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_flat("k = 2\nbroken\n")


class TestPydanticModels:
    def test_protocol_params_defaults(self):
        p = ProtocolParams()
        assert (p.k, p.d, p.q, p.w, p.clients) == (2, 2, 16, 64, 2)
        assert p.radius_policy == RadiusPolicy.STEP
        assert p.post_processing == PostProcessing.FOLD
        assert p.delta is None
        assert p.effective_rho == 0.5

    def test_width_must_be_32_or_64(self):
        with pytest.raises(ValueError):
            ProtocolParams(w=48)

    def test_q_below_width(self):
        with pytest.raises(ValueError):
            ProtocolParams(w=32, q=32)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            ProtocolParams(alpha=1.5)

    def test_transport_defaults(self):
        t = TransportConfig()
        assert t.port == 7070
        assert t.latency_ms == 0.0
        assert t.round_timeout_s == 30.0

    def test_sweep_defaults(self):
        s = SweepConfig()
        assert s.eps_grid == [0.1, 0.25, 0.5, 0.75, 1.0]
        assert [a.value for a in s.algos] == ["lloyd", "su", "gauss", "fast"]

    def test_root_config_minimal(self):
        cfg = FastLloydConfig()
        assert cfg.algo.value == "fast"
        assert cfg.synth is None


class TestLoadConfig:
    def test_shipped_defaults(self, monkeypatch):
        monkeypatch.delenv("FASTLLOYD_SEED", raising=False)
        monkeypatch.delenv("FASTLLOYD_CONFIG", raising=False)
        cfg = load_config()
        assert cfg.params.w == 64
        assert cfg.transport.host == "127.0.0.1"

    def test_file_then_overrides(self, tmp_path, monkeypatch):
        monkeypatch.delenv("FASTLLOYD_SEED", raising=False)
        path = tmp_path / "run.conf"
        path.write_text("k = 4\nepsilon = 0.25\n")
        cfg = load_config(path, {"params": {"epsilon": 0.5}})
        assert cfg.params.k == 4
        assert cfg.params.epsilon == 0.5

    def test_seed_env_override(self, monkeypatch):
        monkeypatch.setenv("FASTLLOYD_SEED", "99")
        assert load_config().params.seed == 99

    def test_invalid_values_raise_configuration_error(self, monkeypatch):
        monkeypatch.delenv("FASTLLOYD_SEED", raising=False)
        with pytest.raises(ConfigurationError):
            load_config(overrides={"params": {"w": 16}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.yaml")

    def test_settings_read_env(self, monkeypatch):
        monkeypatch.setenv("FASTLLOYD_LOG_FORMAT", "json")
        assert get_settings().log_format == "json"
