"""Shared analysis steps used by both the simulate and analyze commands."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analysis.fitting import beta_plateau, fit_q_exponential, fit_q_law, log_bin_inter_times
from .analysis.losses import (
    achieved_rq_ok,
    calibrate_Q,
    combine_loss_analyses,
    extract_loss_events,
)
from .dataclass import AnalysisParams, LossAnalysis, QLawFit, RqResult
from .errors import FitError, InsufficientEventsError, MarketError
from .log import log_debug, log_info, log_warning


def _replica_events(
    returns_by_replica: Sequence[np.ndarray], Q: float
) -> List[LossAnalysis]:
    analyses = []
    for index, returns in enumerate(returns_by_replica):
        try:
            analyses.append(extract_loss_events(returns, Q))
        except InsufficientEventsError as err:
            log_debug(f"Replica {index} contributes no interoccurrence times: {err}")
    return analyses


def analyze_target(
    returns_by_replica: Sequence[np.ndarray], target_rq: float, params: AnalysisParams
) -> RqResult:
    """Calibrate, extract and fit for one target mean interoccurrence time.

    Failures are recorded on the result instead of raised, keeping whatever
    stages completed.
    """
    pooled = np.concatenate([np.asarray(r, dtype=np.float64) for r in returns_by_replica])
    try:
        Q = calibrate_Q(pooled, target_rq, params.rq_tolerance)
    except MarketError as err:
        log_warning(f"R_Q={target_rq:g}: {err}")
        return RqResult(target_rq, float("nan"), None, None, None, err)

    analyses = _replica_events(returns_by_replica, Q)
    if not analyses:
        err = InsufficientEventsError(int(np.count_nonzero(pooled < -Q)), 2)
        log_warning(f"R_Q={target_rq:g}: {err}")
        return RqResult(target_rq, Q, None, None, None, err)

    analysis = combine_loss_analyses(analyses)
    if not achieved_rq_ok(analysis.R_Q, target_rq, params.rq_tolerance):
        log_warning(
            f"R_Q={target_rq:g}: achieved mean interoccurrence {analysis.R_Q:.3f} "
            f"is outside +/-{params.rq_tolerance:.0%} of the target"
        )

    try:
        fit = fit_q_exponential(analysis, params.q0)
        bins = log_bin_inter_times(analysis.inter_times)
    except MarketError as err:
        log_warning(f"R_Q={target_rq:g}: fit skipped, {err}")
        return RqResult(target_rq, Q, analysis, None, None, err)

    log_info(
        f"R_Q={target_rq:g}: Q={Q:.6g}, {analysis.n_events} events, "
        f"q={fit.q:.4f}, beta={fit.beta_scale:.4f}"
    )
    return RqResult(target_rq, Q, analysis, bins, fit)


def analyze_returns(
    returns_by_replica: Sequence[np.ndarray], params: AnalysisParams
) -> List[RqResult]:
    """Run the loss analysis for every configured target R_Q.

    Args:
        returns_by_replica: Daily returns of each replica, in replica order.
        params: Analysis settings.

    Returns:
        One result per target, in configured order.
    """
    return [analyze_target(returns_by_replica, rq, params) for rq in params.target_rq]


def summarize_laws(
    results: Sequence[RqResult], params: AnalysisParams
) -> Tuple[Optional[QLawFit], Optional[float]]:
    """Return the q(R_Q) regression and the beta plateau over fitted results."""
    fitted = [r for r in results if r.fit is not None and r.analysis is not None]
    q_law = None
    try:
        q_law = fit_q_law([r.analysis.R_Q for r in fitted], [r.fit.q for r in fitted])
    except FitError as err:
        log_debug(f"q(R_Q) law not regressed: {err}")
    else:
        log_info(
            f"q(R_Q) law: slope {q_law.slope:.4f} (q0={params.q0}), "
            f"intercept {q_law.intercept:.4f}"
        )
    plateau = beta_plateau(fitted)
    if plateau is not None:
        log_info(f"beta plateau: {plateau:.4f} (expected {params.beta_plateau})")
    return q_law, plateau


def first_failure(results: Sequence[RqResult]) -> Optional[MarketError]:
    """Return the first recorded error when no target produced a fit."""
    if any(r.fit is not None for r in results):
        return None
    for item in results:
        if item.error is not None:
            return item.error
    return None


def events_at_largest_target(results: Sequence[RqResult]) -> int:
    """Return the loss-event count of the largest target R_Q."""
    if not results:
        return 0
    largest = max(results, key=lambda r: r.target_rq)
    return largest.analysis.n_events if largest.analysis is not None else 0
