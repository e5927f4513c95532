"""Fitting the q-exponential law to interoccurrence times.

Times are grouped into log-spaced integer bins holding at least ``MIN_BIN_COUNT``
samples each. The fit minimizes the count-weighted squared difference between
the log of the empirical mass per day and the log of the discretely normalized
q-exponential mass over the same bins.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import linregress

from ..const import (
    BINS_PER_DECADE,
    DEFAULT_Q0,
    MIN_BIN_COUNT,
    MIN_FIT_BINS,
    MIN_FIT_SAMPLES,
    PLATEAU_RQ_MIN,
    R_MAX_FACTOR,
)
from ..dataclass import LogBins, LossAnalysis, QExpFit, QLawFit, RqResult
from ..errors import FitError, InsufficientEventsError
from ..log import log_debug
from .qexp import kernel_sum, normalization

Q_BOUNDS = (1.0, 2.5)
BETA_BOUNDS = (1e-6, 10.0)
Q_STARTS = (1.05, 1.3, 1.6)


def _log_edges(largest: int) -> np.ndarray:
    top = np.log10(largest + 1.0)
    exponents = np.arange(0, int(np.ceil(top * BINS_PER_DECADE)) + 1) / BINS_PER_DECADE
    edges = np.unique(np.floor(10.0**exponents).astype(np.int64))
    if edges[-1] <= largest:
        edges = np.append(edges, largest + 1)
    return edges


def log_bin_inter_times(
    inter_times: Sequence[int] | np.ndarray, min_count: int = MIN_BIN_COUNT
) -> LogBins:
    """Group integer times into log-spaced bins with at least *min_count* each.

    Adjacent bins are merged from small ``r`` upwards until each reaches
    *min_count*; a short remainder at the top joins the last full bin.

    Raises:
        FitError: If the times are not positive or fewer than
            ``MIN_FIT_BINS`` bins survive.
    """
    times = np.asarray(inter_times, dtype=np.int64)
    if times.size == 0 or times.min() < 1:
        raise FitError("interoccurrence times must be positive integers")

    edges = _log_edges(int(times.max()))
    raw, _ = np.histogram(times, bins=edges)

    lower: List[int] = []
    upper: List[int] = []
    counts: List[int] = []
    start, acc = int(edges[0]), 0
    for k, count in enumerate(raw):
        acc += int(count)
        if acc >= min_count:
            lower.append(start)
            upper.append(int(edges[k + 1]))
            counts.append(acc)
            start, acc = int(edges[k + 1]), 0
    if acc and counts:
        upper[-1] = int(edges[-1])
        counts[-1] += acc

    if len(counts) < MIN_FIT_BINS:
        raise FitError(
            f"only {len(counts)} bins with >= {min_count} events, need {MIN_FIT_BINS}"
        )
    return LogBins(
        lower=np.array(lower, dtype=np.int64),
        upper=np.array(upper, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64),
        total=int(times.size),
    )


def model_bin_mass(bins: LogBins, q: float, beta_scale: float, r_max: int) -> np.ndarray:
    """Return the normalized model mass per day averaged over every bin."""
    norm = normalization(r_max, q, beta_scale)
    sums = np.array(
        [
            kernel_sum(int(lo), int(hi), q, beta_scale)
            for lo, hi in zip(bins.lower, bins.upper)
        ]
    )
    return sums / (norm * bins.widths)


def _fit_times(times: np.ndarray, q0: float) -> QExpFit:
    if times.size < MIN_FIT_SAMPLES:
        raise InsufficientEventsError(
            int(times.size), MIN_FIT_SAMPLES, "interoccurrence samples"
        )
    bins = log_bin_inter_times(times)
    r_max = R_MAX_FACTOR * int(times.max())
    target = np.log(bins.empirical)
    weights = np.sqrt(bins.counts)

    def residuals(x: np.ndarray) -> np.ndarray:
        model = model_bin_mass(bins, float(x[0]), float(x[1]), r_max)
        return weights * (np.log(model) - target)

    beta0 = float(np.clip(1.0 / times.mean(), BETA_BOUNDS[0] * 10, BETA_BOUNDS[1] / 10))
    best = None
    for q_start in Q_STARTS:
        try:
            result = least_squares(
                residuals,
                x0=[q_start, beta0],
                bounds=([Q_BOUNDS[0], BETA_BOUNDS[0]], [Q_BOUNDS[1], BETA_BOUNDS[1]]),
                x_scale=[0.1, beta0],
            )
        except (ValueError, FloatingPointError) as err:
            log_debug(f"q-exponential fit from q={q_start} failed: {err}")
            continue
        if np.isfinite(result.cost) and (best is None or result.cost < best.cost):
            best = result
    if best is None:
        raise FitError("least-squares fit did not converge from any starting point")

    q, beta_scale = float(best.x[0]), float(best.x[1])
    log_residual = np.log(model_bin_mass(bins, q, beta_scale, r_max)) - target
    return QExpFit(
        q=q,
        beta_scale=beta_scale,
        q0=q0,
        rms_log_residual=float(np.sqrt(np.mean(log_residual**2))),
        r_max=r_max,
        n_bins=int(bins.counts.size),
        n_samples=int(times.size),
    )


def fit_q_exponential(analysis: LossAnalysis, q0: float = DEFAULT_Q0) -> QExpFit:
    """Fit ``(q, beta)`` of the q-exponential to a loss analysis.

    Args:
        analysis: Loss events with at least ``MIN_FIT_SAMPLES`` interoccurrence
            times.
        q0: Directional coefficient carried into the result for comparison.

    Raises:
        InsufficientEventsError: With fewer than ``MIN_FIT_SAMPLES`` samples.
        FitError: When binning is degenerate or no start converges.
    """
    return _fit_times(np.asarray(analysis.inter_times, dtype=np.int64), q0)


def fit_inter_times(
    inter_times: Sequence[int] | np.ndarray, q0: float = DEFAULT_Q0
) -> QExpFit:
    """Fit raw interoccurrence times that did not come from a return series."""
    return _fit_times(np.asarray(inter_times, dtype=np.int64), q0)


def fit_q_law(rq_values: Sequence[float], q_values: Sequence[float]) -> QLawFit:
    """Regress fitted ``q`` against ``ln(R_Q / 2)``.

    The slope estimates ``q0`` and the intercept should be close to one.

    Raises:
        FitError: With fewer than two points or a degenerate ``R_Q`` spread.
    """
    x = np.log(np.asarray(rq_values, dtype=np.float64) / 2.0)
    y = np.asarray(q_values, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError("q(R_Q) regression needs at least two distinct R_Q values")
    result = linregress(x, y)
    return QLawFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_value=float(result.rvalue),
        n_points=int(x.size),
    )


def beta_plateau(
    results: Sequence[RqResult], rq_min: float = PLATEAU_RQ_MIN
) -> Optional[float]:
    """Return the mean fitted rate over results with achieved ``R_Q > rq_min``."""
    rates = [
        item.fit.beta_scale
        for item in results
        if item.fit is not None and item.analysis is not None and item.analysis.R_Q > rq_min
    ]
    if not rates:
        return None
    return float(np.mean(rates))
