"""Shared fixtures for Threshold Market tests."""

# pylint: disable=redefined-outer-name

import numpy as np
from pytest import fixture

from threshold_market.config import load_config
from threshold_market.const import OUTPUT_DIR_ENV
from threshold_market.dataclass import LogSettings
from threshold_market.log import reset_logging, setup_logging


@fixture(autouse=True)
def isolated_logging(monkeypatch):
    """Keep the log facade detached and the output env override unset."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    reset_logging()
    yield
    reset_logging()


@fixture
def rng():
    """Return a freshly seeded random generator."""
    return np.random.default_rng(20240229)


@fixture
def log_dir(tmp_path):
    """Activate DEBUG-level file logging in a temporary directory."""
    setup_logging(LogSettings(level="DEBUG"), str(tmp_path))
    return tmp_path


@fixture
def work_dir(tmp_path, monkeypatch):
    """Run the test from an empty working directory (no stray config file)."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


@fixture
def smoke_config(work_dir):
    """Return a tiny, fast configuration writing into the working directory."""
    return load_config(
        None,
        {
            "model.n": "4",
            "market.tau": "10",
            "run.total_days": "200",
            "run.warmup_rounds": "5",
            "run.min_events": "0",
            "analysis.target_rq": "3, 5",
            "output.dir": str(work_dir / "results"),
        },
    )
