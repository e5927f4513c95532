"""Tests for threshold_market.dataclass."""

# pylint: disable=duplicate-code

from dataclasses import FrozenInstanceError

import numpy as np
from pytest import approx, raises

from threshold_market.const import CSV_HEADERS, FIGURE_CSV
from threshold_market.dataclass import (
    ExperimentConfig,
    LogBins,
    MarketParams,
    MarketSeries,
    ModelParams,
    ReplicaRun,
    WmNoiseParams,
)


class TestParameters:
    """Tests for the parameter objects."""

    def test_depth_defaults_to_agent_count(self):
        """Lambda = 0 means the number of agents."""
        assert MarketParams().depth(1024) == 1024.0
        assert MarketParams(Lambda=300.0).depth(1024) == 300.0

    def test_n_agents(self):
        """N = n * n."""
        assert ModelParams(n=32).n_agents == 1024

    def test_pareto_exponent(self):
        """ln K / ln b for the reference noise."""
        assert WmNoiseParams().pareto_exponent == approx(2.321928, abs=1e-6)

    def test_frozen(self):
        """Parameter objects cannot be modified."""
        with raises(FrozenInstanceError):
            MarketParams().tau = 5  # type: ignore[misc]

    def test_coupling_follows_model(self):
        """The coupling spec carries the model's J."""
        config = ExperimentConfig(model=ModelParams(J=0.5))
        assert config.coupling.J == 0.5


class TestDerivedProperties:
    """Tests for computed properties of result objects."""

    def test_log_bins(self):
        """Widths, centres and the empirical mass per day."""
        bins = LogBins(
            lower=np.array([1, 2, 4]),
            upper=np.array([2, 4, 10]),
            counts=np.array([10, 6, 4]),
            total=20,
        )
        assert bins.widths.tolist() == [1, 2, 6]
        assert bins.centers.tolist() == approx([1.0, np.sqrt(6.0), 6.0])
        assert bins.empirical.tolist() == approx([0.5, 0.15, 1 / 30])

    def test_replica_days(self):
        """A replica has as many days as returns."""
        series = MarketSeries(
            magnetization_per_round=np.zeros(31),
            log_price=np.zeros(4),
            returns=np.zeros(3),
        )
        assert ReplicaRun(index=0, series=series).days == 3

    def test_figure_header(self):
        """The plot-data layout is fixed."""
        assert CSV_HEADERS[FIGURE_CSV] == ("R_Q", "r", "empirical_P", "fitted_P", "paper_law_P")
