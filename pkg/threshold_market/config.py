"""
This module loads, validates and auto-manages the experiment configuration.

The configuration is an INI file whose sections are the dotted prefixes of a
flat key space (``model.lambda`` is ``lambda`` in ``[model]``). Keys are case
sensitive because the model distinguishes ``lambda`` (threshold amplitude)
from ``Lambda`` (depth of market).
"""

from __future__ import annotations

from configparser import ConfigParser, Error as ConfigParserError
from json import JSONDecodeError, load
from math import isfinite
from os.path import exists
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from .const import (
    DEFAULT_B,
    DEFAULT_B0,
    DEFAULT_BETA_PLATEAU,
    DEFAULT_COUPLING,
    DEFAULT_K,
    DEFAULT_LAMBDA,
    DEFAULT_LINEAR_SIZE,
    DEFAULT_M_TRAP,
    DEFAULT_Q0,
    DEFAULT_RQ_TOLERANCE,
    DEFAULT_TARGET_RQ,
    DEFAULT_TAU,
    THRESHOLD_FREEZE_MODES,
)
from .dataclass import (
    AnalysisParams,
    DynamicsParams,
    ExperimentConfig,
    LogSettings,
    MarketParams,
    ModelParams,
    RunParams,
    WmNoiseParams,
)
from .errors import ConfigError
from .log import log_warning
from .paths import find_config_file

DEFAULT_CONFIG: Dict[str, Dict[str, str]] = {
    "model": {
        "n": str(DEFAULT_LINEAR_SIZE),
        "J": str(DEFAULT_COUPLING),
        "lambda": str(DEFAULT_LAMBDA),
    },
    "noise": {
        "K": str(DEFAULT_K),
        "b": str(DEFAULT_B),
        "b0": str(DEFAULT_B0),
    },
    "market": {
        "Lambda": "0",
        "tau": str(DEFAULT_TAU),
        "m_trap": str(DEFAULT_M_TRAP),
        "threshold_freeze": "drawing",
        "record_activity": "false",
    },
    "run": {
        "warmup_rounds": "100",
        "total_days": "20000",
        "seed": "12345",
        "replicas": "1",
        "workers": "1",
        "min_events": "100",
    },
    "analysis": {
        "target_rq": ", ".join(f"{value:g}" for value in DEFAULT_TARGET_RQ),
        "q0": str(DEFAULT_Q0),
        "beta_plateau": str(DEFAULT_BETA_PLATEAU),
        "rq_tolerance": str(DEFAULT_RQ_TOLERANCE),
    },
    "output": {
        "dir": "results",
        "write_rounds": "true",
    },
    "logging": {
        "enable_logging": "true",
        "log_file": "threshold-market.log",
        "level": "INFO",
        "clear_log": "false",
    },
}

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _new_parser() -> ConfigParser:
    parser = ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment]
    return parser


def ensure_config_exists(path: str):
    """
    Create a default config file if it does not exist, or add missing
    sections/options and drop unknown ones, preserving user edits.

    Args:
        path (str): Location of the INI file.
    """
    if exists(path):
        _check_config(path)
    else:
        _create_config(path)


def _check_config(path: str):
    """
    Check for missing sections/options in the config file and add them if
    needed, removing options the package does not know.

    Args:
        path (str): Location of the INI file.
    """
    config = _new_parser()
    config.read(path, encoding="utf-8")
    changed = False
    for section, options in DEFAULT_CONFIG.items():
        if not config.has_section(section):
            config.add_section(section)
            changed = True
        for opt in set(config.options(section)) - set(options):
            config.remove_option(section, opt)
            changed = True
        for key, value in options.items():
            if not config.has_option(section, key):
                config.set(section, key, value)
                changed = True
    if changed:
        with open(path, "w", encoding="utf-8") as configfile:
            config.write(configfile)


def _create_config(path: str):
    """
    Create a new config file with all default sections and options.

    Args:
        path (str): Location of the INI file.
    """
    with open(path, "w", encoding="utf-8") as f:
        for section, options in DEFAULT_CONFIG.items():
            f.write(f"[{section}]\n")
            for key, value in options.items():
                f.write(f"{key} = {value}\n")
            f.write("\n")


def _read_manifest_config(path: str) -> Dict[str, Dict[str, str]]:
    """Return the config echo stored in a run manifest."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = load(f)
    except (OSError, JSONDecodeError) as e:
        raise ConfigError(f"cannot read manifest {path}: {e}") from e

    sections = payload.get("config") if isinstance(payload, dict) else None
    if not isinstance(sections, dict):
        raise ConfigError(f"manifest {path} has no 'config' object")
    return {
        str(section): {str(k): str(v) for k, v in options.items()}
        for section, options in sections.items()
        if isinstance(options, dict)
    }


def _apply_layer(
    parser: ConfigParser, sections: Mapping[str, Mapping[str, str]], source: str
):
    """Merge *sections* into *parser*, rejecting unknown sections/options."""
    unknown: List[str] = []
    for section, options in sections.items():
        if section not in DEFAULT_CONFIG:
            unknown.append(f"{source}: unknown section [{section}]")
            continue
        for key, value in options.items():
            if key not in DEFAULT_CONFIG[section]:
                unknown.append(f"{source}: unknown option {section}.{key}")
                continue
            parser.set(section, key, str(value).strip())
    if unknown:
        raise ConfigError(unknown)


def _split_overrides(overrides: Mapping[str, str]) -> Dict[str, Dict[str, str]]:
    layered: Dict[str, Dict[str, str]] = {}
    for dotted, value in overrides.items():
        section, sep, key = dotted.partition(".")
        if not sep or not key:
            raise ConfigError(f"override '{dotted}' is not a dotted section.key name")
        layered.setdefault(section, {})[key] = value
    return layered


class _Reader:
    """Typed access to a parser that collects every parse/constraint failure."""

    def __init__(self, parser: ConfigParser):
        self._parser = parser
        self.violations: List[str] = []

    def _raw(self, section: str, key: str) -> str:
        return self._parser.get(section, key).strip()

    def _convert(self, section: str, key: str, kind: Callable, label: str):
        raw = self._raw(section, key)
        try:
            return kind(raw)
        except ValueError:
            self.violations.append(f"{section}.{key}: expected {label}, got '{raw}'")
            return kind(DEFAULT_CONFIG[section][key])

    def integer(self, section: str, key: str) -> int:
        """Return an integer option."""
        return self._convert(section, key, int, "an integer")

    def real(self, section: str, key: str) -> float:
        """Return a finite real option."""
        value = self._convert(section, key, float, "a real number")
        if not isfinite(value):
            self.violations.append(f"{section}.{key}: must be finite")
            return float(DEFAULT_CONFIG[section][key])
        return value

    def boolean(self, section: str, key: str) -> bool:
        """Return a boolean option."""
        try:
            return self._parser.getboolean(section, key)
        except ValueError:
            self.violations.append(
                f"{section}.{key}: expected a boolean, got '{self._raw(section, key)}'"
            )
            return DEFAULT_CONFIG[section][key] == "true"

    def text(self, section: str, key: str) -> str:
        """Return a string option."""
        return self._raw(section, key)

    def reals(self, section: str, key: str) -> Tuple[float, ...]:
        """Return a comma-separated list of reals."""
        raw = self._raw(section, key)
        try:
            values = tuple(float(p) for p in raw.split(",") if p.strip())
        except ValueError:
            self.violations.append(
                f"{section}.{key}: expected a comma-separated list of reals, got '{raw}'"
            )
            return ()
        if not values:
            self.violations.append(f"{section}.{key}: list must not be empty")
        return values

    def require(self, ok: bool, name: str, constraint: str):
        """Record a violation of *constraint* on the dotted parameter *name*."""
        if not ok:
            self.violations.append(f"{name}: {constraint}")


def _build(reader: _Reader) -> ExperimentConfig:
    model = ModelParams(
        n=reader.integer("model", "n"),
        J=reader.real("model", "J"),
        lam=reader.real("model", "lambda"),
    )
    noise = WmNoiseParams(
        K=reader.real("noise", "K"),
        b=reader.real("noise", "b"),
        b0=reader.real("noise", "b0"),
    )
    market = MarketParams(
        Lambda=reader.real("market", "Lambda"),
        tau=reader.integer("market", "tau"),
        m_trap=reader.real("market", "m_trap"),
        record_activity=reader.boolean("market", "record_activity"),
    )
    dynamics = DynamicsParams(
        lam=model.lam,
        threshold_freeze=reader.text("market", "threshold_freeze").lower(),
    )
    run = RunParams(
        warmup_rounds=reader.integer("run", "warmup_rounds"),
        total_days=reader.integer("run", "total_days"),
        seed=reader.integer("run", "seed"),
        replicas=reader.integer("run", "replicas"),
        workers=reader.integer("run", "workers"),
        min_events=reader.integer("run", "min_events"),
    )
    analysis = AnalysisParams(
        target_rq=reader.reals("analysis", "target_rq"),
        q0=reader.real("analysis", "q0"),
        beta_plateau=reader.real("analysis", "beta_plateau"),
        rq_tolerance=reader.real("analysis", "rq_tolerance"),
    )
    logging = LogSettings(
        enable_logging=reader.boolean("logging", "enable_logging"),
        log_file=reader.text("logging", "log_file"),
        level=reader.text("logging", "level").upper(),
        clear_log=reader.boolean("logging", "clear_log"),
    )
    return ExperimentConfig(
        model=model,
        noise=noise,
        market=market,
        dynamics=dynamics,
        run=run,
        analysis=analysis,
        logging=logging,
        output_dir=reader.text("output", "dir"),
        write_rounds=reader.boolean("output", "write_rounds"),
    )


def _validate(reader: _Reader, config: ExperimentConfig):
    m, z, k, r, a = (
        config.model,
        config.noise,
        config.market,
        config.run,
        config.analysis,
    )
    req = reader.require
    req(m.n >= 2, "model.n", "n >= 2")
    req(m.J > 0, "model.J", "J > 0")
    req(m.lam > 0, "model.lambda", "lambda > 0")
    req(z.K > 1, "noise.K", "K > 1")
    req(z.b > 1, "noise.b", "b > 1")
    req(z.b0 > 0, "noise.b0", "b0 > 0")
    req(k.Lambda >= 0, "market.Lambda", "Lambda > 0 (or 0 for Lambda = N)")
    req(k.tau >= 1, "market.tau", "tau >= 1")
    req(0 < k.m_trap <= 1, "market.m_trap", "0 < m_trap <= 1")
    req(
        config.dynamics.threshold_freeze in THRESHOLD_FREEZE_MODES,
        "market.threshold_freeze",
        f"threshold_freeze in {'|'.join(THRESHOLD_FREEZE_MODES)}",
    )
    req(r.warmup_rounds >= 0, "run.warmup_rounds", "warmup_rounds >= 0")
    req(r.total_days >= 2, "run.total_days", "total_days >= 2")
    req(r.seed >= 0, "run.seed", "seed >= 0")
    req(r.replicas >= 1, "run.replicas", "replicas >= 1")
    req(r.workers >= 1, "run.workers", "workers >= 1")
    req(r.min_events >= 0, "run.min_events", "min_events >= 0")
    req(
        all(v >= 1 for v in a.target_rq), "analysis.target_rq", "every target_rq >= 1"
    )
    req(a.beta_plateau > 0, "analysis.beta_plateau", "beta_plateau > 0")
    req(0 < a.rq_tolerance < 1, "analysis.rq_tolerance", "0 < rq_tolerance < 1")
    req(config.output_dir != "", "output.dir", "dir must not be empty")
    req(
        config.logging.level in _LOG_LEVELS,
        "logging.level",
        f"level in {'|'.join(_LOG_LEVELS)}",
    )


def config_warnings(config: ExperimentConfig) -> List[str]:
    """Return non-fatal findings about *config*."""
    warnings: List[str] = []
    exponent = config.noise.pareto_exponent
    if exponent <= 2:
        warnings.append(
            f"noise: Pareto exponent ln K / ln b = {exponent:.4g} <= 2 "
            "(infinite variance regime)"
        )
    return warnings


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """Load, merge and validate the experiment configuration.

    Layers, later winning: built-in defaults, the config file (INI, or the
    ``config`` echo of a ``.json`` run manifest), then dotted *overrides*.

    Args:
        path: Config file; ``None`` looks for the default file in the CWD.
        overrides: ``{"model.lambda": "2.5", ...}`` from CLI flags.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: On parse errors, unknown keys or constraint violations;
            all violations are reported together.
    """
    parser = _new_parser()
    parser.read_dict(DEFAULT_CONFIG)

    source = find_config_file(path)
    if source is not None:
        if source.lower().endswith(".json"):
            _apply_layer(parser, _read_manifest_config(source), source)
        else:
            if not exists(source):
                raise ConfigError(f"config file not found: {source}")
            file_parser = _new_parser()
            try:
                file_parser.read(source, encoding="utf-8")
            except ConfigParserError as e:
                raise ConfigError(f"cannot parse {source}: {e}") from e
            _apply_layer(
                parser,
                {s: dict(file_parser.items(s)) for s in file_parser.sections()},
                source,
            )

    if overrides:
        _apply_layer(parser, _split_overrides(overrides), "override")

    reader = _Reader(parser)
    config = _build(reader)
    _validate(reader, config)
    if reader.violations:
        raise ConfigError(reader.violations)

    for warning in config_warnings(config):
        log_warning(warning)
    return config


def _real_text(value: float) -> str:
    return repr(float(value))


def config_to_sections(config: ExperimentConfig) -> Dict[str, Dict[str, str]]:
    """Render *config* as INI-style sections (the manifest config echo)."""
    return {
        "model": {
            "n": str(config.model.n),
            "J": _real_text(config.model.J),
            "lambda": _real_text(config.model.lam),
        },
        "noise": {
            "K": _real_text(config.noise.K),
            "b": _real_text(config.noise.b),
            "b0": _real_text(config.noise.b0),
        },
        "market": {
            "Lambda": _real_text(config.market.Lambda),
            "tau": str(config.market.tau),
            "m_trap": _real_text(config.market.m_trap),
            "threshold_freeze": config.dynamics.threshold_freeze,
            "record_activity": str(config.market.record_activity).lower(),
        },
        "run": {
            "warmup_rounds": str(config.run.warmup_rounds),
            "total_days": str(config.run.total_days),
            "seed": str(config.run.seed),
            "replicas": str(config.run.replicas),
            "workers": str(config.run.workers),
            "min_events": str(config.run.min_events),
        },
        "analysis": {
            "target_rq": ", ".join(_real_text(v) for v in config.analysis.target_rq),
            "q0": _real_text(config.analysis.q0),
            "beta_plateau": _real_text(config.analysis.beta_plateau),
            "rq_tolerance": _real_text(config.analysis.rq_tolerance),
        },
        "output": {
            "dir": config.output_dir,
            "write_rounds": str(config.write_rounds).lower(),
        },
        "logging": {
            "enable_logging": str(config.logging.enable_logging).lower(),
            "log_file": config.logging.log_file,
            "level": config.logging.level,
            "clear_log": str(config.logging.clear_log).lower(),
        },
    }
