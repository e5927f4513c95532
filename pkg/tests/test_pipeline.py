"""Tests for threshold_market.pipeline."""

import numpy as np
from pytest import approx

from threshold_market.dataclass import AnalysisParams
from threshold_market.errors import CalibrationError, FitError, InsufficientEventsError
from threshold_market.pipeline import (
    analyze_returns,
    analyze_target,
    events_at_largest_target,
    first_failure,
    summarize_laws,
)

PARAMS = AnalysisParams(target_rq=(5.0, 10.0))


class TestAnalyzeTarget:
    """Tests for one target R_Q."""

    def test_iid_returns_pooled_over_replicas(self, rng):
        """Two i.i.d. replicas calibrate jointly and fit in the exponential regime."""
        replicas = [rng.standard_normal(50_000), rng.standard_normal(50_000)]
        result = analyze_target(replicas, 10.0, PARAMS)
        assert result.error is None
        assert result.Q == approx(1.2816, abs=0.02)
        assert result.analysis.R_Q == approx(10.0, rel=0.05)
        assert result.fit.q <= 1.1
        assert result.bins.counts.sum() == result.analysis.inter_times.size

    def test_calibration_failure_is_recorded(self):
        """A target longer than the history leaves Q undefined."""
        result = analyze_target([-np.ones(5)], 10.0, PARAMS)
        assert isinstance(result.error, CalibrationError)
        assert np.isnan(result.Q)
        assert result.analysis is None

    def test_one_event_per_replica(self):
        """Events that never pair up within a replica give no interoccurrence time."""
        replicas = [np.array([-1.0, 0, 0, 0]), np.array([0, 0, -1.0, 0])]
        result = analyze_target(replicas, 4.0, PARAMS)
        assert isinstance(result.error, InsufficientEventsError)
        assert result.Q < 1.0

    def test_fit_failure_keeps_events(self, log_dir):
        """Degenerate times keep the loss analysis and record the fit error."""
        result = analyze_target([np.tile([-1.0, 1.0], 50)], 2.0, PARAMS)
        assert result.analysis.R_Q == 2.0
        assert result.fit is None
        assert isinstance(result.error, FitError)
        assert "fit skipped" in (log_dir / "threshold-market.log").read_text()

    def test_too_few_times_is_insufficient(self):
        """Under 30 interoccurrence times reports insufficient events, not a binning failure."""
        returns = np.tile([-1.0, 0.0, 0.0, 0.0, 0.0], 12)
        result = analyze_target([returns], 5.0, PARAMS)
        assert result.analysis.inter_times.size == 11
        assert result.fit is None
        assert result.bins is None
        assert isinstance(result.error, InsufficientEventsError)
        assert result.error.exit_code == 3

    def test_tolerance_miss_is_a_warning(self, log_dir):
        """Ties in the returns push the achieved R_Q off target without failing."""
        returns = np.concatenate([-np.ones(60), np.zeros(40)])
        result = analyze_target([returns], 5.0, PARAMS)
        assert result.analysis.R_Q == 1.0
        assert "outside" in (log_dir / "threshold-market.log").read_text()


class TestSummaries:
    """Tests for the cross-target summaries."""

    def test_analyze_returns_keeps_order(self, rng):
        """One result per target, in configured order."""
        returns = [rng.standard_normal(20_000)]
        results = analyze_returns(returns, AnalysisParams(target_rq=(10.0, 5.0)))
        assert [r.target_rq for r in results] == [10.0, 5.0]
        assert events_at_largest_target(results) == results[0].analysis.n_events

    def test_summarize_laws(self, rng):
        """Two fitted targets give a regression; the plateau needs R_Q above 15."""
        results = analyze_returns([rng.standard_normal(60_000)], AnalysisParams(target_rq=(5.0, 20.0)))
        q_law, plateau = summarize_laws(results, PARAMS)
        assert q_law.n_points == 2
        assert plateau == approx(results[1].fit.beta_scale)

    def test_summarize_without_fits(self):
        """No fitted target means neither law nor plateau."""
        results = analyze_returns([-np.ones(5)], PARAMS)
        assert summarize_laws(results, PARAMS) == (None, None)
        assert isinstance(first_failure(results), InsufficientEventsError)
        assert isinstance(results[1].error, CalibrationError)
        assert events_at_largest_target(results) == 0
        assert events_at_largest_target([]) == 0

    def test_first_failure_ignored_when_something_fits(self, rng):
        """A single successful target is enough."""
        returns = [rng.standard_normal(20_000)]
        results = analyze_returns(returns, AnalysisParams(target_rq=(5.0, 50_000.0)))
        assert results[1].error is not None
        assert first_failure(results) is None
