"""Tests for threshold_market.config."""

from json import dumps

from pytest import mark, raises

from threshold_market.config import (
    DEFAULT_CONFIG,
    config_to_sections,
    config_warnings,
    ensure_config_exists,
    load_config,
)
from threshold_market.dataclass import AnalysisParams, MarketParams, ModelParams, WmNoiseParams
from threshold_market.errors import ConfigError


class TestEnsureConfigExists:
    """Tests for config creation, preservation, and validation."""

    def test_creates_config_when_missing(self, tmp_path):
        """Verify the INI file is created with every section."""
        config_file = tmp_path / "threshold-market.ini"
        ensure_config_exists(str(config_file))
        content = config_file.read_text()
        for section in DEFAULT_CONFIG:
            assert f"[{section}]" in content

    def test_preserves_existing_values(self, tmp_path):
        """Verify user-edited values survive validation, case included."""
        config_file = tmp_path / "threshold-market.ini"
        config_file.write_text("[model]\nlambda = 2.5\n\n[market]\nLambda = 64\n")
        ensure_config_exists(str(config_file))
        content = config_file.read_text()
        assert "lambda = 2.5" in content
        assert "Lambda = 64" in content
        assert "[analysis]" in content

    def test_removes_unknown_options(self, tmp_path):
        """Verify unknown options are removed during validation."""
        config_file = tmp_path / "threshold-market.ini"
        config_file.write_text("[model]\nn = 16\nbogus_option = yes\n")
        ensure_config_exists(str(config_file))
        content = config_file.read_text()
        assert "bogus_option" not in content
        assert "n = 16" in content


@mark.usefixtures("work_dir")
class TestLoadConfig:
    """Tests for layering and validation."""

    def test_defaults(self):
        """Without a file the reference parameter set applies."""
        config = load_config()
        assert config.model.n == 32
        assert config.model.lam == 2.0
        assert (config.noise.K, config.noise.b, config.noise.b0) == (5.0, 2.0, 0.2)
        assert config.market.tau == 1000
        assert config.market.depth(1024) == 1024.0
        assert config.dynamics.threshold_freeze == "drawing"
        assert config.analysis.target_rq == (2.0, 5.0, 10.0, 30.0, 70.0)
        assert config.run.total_days == 20000

    def test_defaults_match_dataclasses(self):
        """The INI defaults and the dataclass defaults come from the same constants."""
        config = load_config()
        assert config.model == ModelParams()
        assert config.noise == WmNoiseParams()
        assert config.market == MarketParams()
        assert config.analysis == AnalysisParams()
        assert DEFAULT_CONFIG["analysis"]["target_rq"] == "2, 5, 10, 30, 70"

    def test_file_in_working_directory(self, work_dir):
        """The default file name is picked up from the working directory."""
        (work_dir / "threshold-market.ini").write_text("[market]\ntau = 250\n")
        assert load_config().market.tau == 250

    def test_overrides_win(self, work_dir):
        """Dotted overrides beat the file."""
        path = work_dir / "custom.ini"
        path.write_text("[model]\nlambda = 3.0\n")
        config = load_config(str(path), {"model.lambda": "2.5", "run.seed": "7"})
        assert config.model.lam == 2.5
        assert config.dynamics.lam == 2.5
        assert config.run.seed == 7

    def test_negative_lambda_names_the_parameter(self):
        """lambda = -1 is rejected with the dotted name and constraint."""
        with raises(ConfigError) as err:
            load_config(None, {"model.lambda": "-1"})
        assert "model.lambda: lambda > 0" in err.value.violations
        assert err.value.exit_code == 2

    def test_collects_all_violations(self):
        """Every failure is reported at once."""
        with raises(ConfigError) as err:
            load_config(None, {"model.n": "1", "market.tau": "zero", "noise.b0": "0"})
        names = " ".join(err.value.violations)
        assert "model.n" in names
        assert "market.tau" in names
        assert "noise.b0" in names

    @mark.parametrize(
        "key, value",
        [
            ("market.threshold_freeze", "sometimes"),
            ("market.m_trap", "1.5"),
            ("analysis.target_rq", "0.5, 10"),
            ("analysis.target_rq", ""),
            ("logging.level", "chatty"),
            ("run.total_days", "1"),
            ("model.J", "nan"),
        ],
    )
    def test_rejects_invalid_values(self, key, value):
        """Out-of-range and unparsable values are config errors."""
        with raises(ConfigError):
            load_config(None, {key: value})

    def test_unknown_keys(self):
        """Unknown sections and options are rejected, not ignored."""
        with raises(ConfigError):
            load_config(None, {"model.temperature": "1"})
        with raises(ConfigError):
            load_config(None, {"physics.n": "1"})
        with raises(ConfigError):
            load_config(None, {"lambda": "1"})

    def test_missing_explicit_file(self, work_dir):
        """An explicit path that does not exist is an error."""
        with raises(ConfigError):
            load_config(str(work_dir / "absent.ini"))

    def test_infinite_variance_warning(self):
        """K = 2, b = 4 is accepted but warned about."""
        config = load_config(None, {"noise.K": "2", "noise.b": "4"})
        warnings = config_warnings(config)
        assert len(warnings) == 1
        assert "infinite variance" in warnings[0]
        assert not config_warnings(load_config())

    def test_manifest_round_trip(self, work_dir):
        """The config echo of a manifest reloads to the same configuration."""
        config = load_config(None, {"model.n": "8", "analysis.target_rq": "3, 12.5"})
        manifest = work_dir / "manifest.json"
        manifest.write_text(dumps({"config": config_to_sections(config)}))
        assert load_config(str(manifest)) == config

    def test_manifest_without_config(self, work_dir):
        """A manifest lacking the config echo cannot be reused."""
        manifest = work_dir / "manifest.json"
        manifest.write_text(dumps({"seed": 1}))
        with raises(ConfigError):
            load_config(str(manifest))
