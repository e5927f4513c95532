"""Loss events and their interoccurrence times.

A loss event is a day whose return falls below ``-Q``. Interoccurrence times
count whole days between consecutive events; the stretch after the last event
is censored and dropped, and nothing wraps around.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..const import CUT_MARGIN, DEFAULT_RQ_TOLERANCE
from ..dataclass import LossAnalysis
from ..errors import CalibrationError, DomainError, InsufficientEventsError


def _mass_function(inter_times: np.ndarray):
    r_values, counts = np.unique(inter_times, return_counts=True)
    return r_values, counts / counts.sum()


def _analysis(Q: float, event_days: np.ndarray, inter_times: np.ndarray) -> LossAnalysis:
    pq_r, pq = _mass_function(inter_times)
    return LossAnalysis(
        Q=float(Q),
        event_days=event_days,
        inter_times=inter_times,
        R_Q=float(inter_times.mean()),
        pq_r=pq_r,
        pq=pq,
    )


def extract_loss_events(returns: Sequence[float] | np.ndarray, Q: float) -> LossAnalysis:
    """Find days with ``return < -Q`` and their interoccurrence statistics.

    Raises:
        DomainError: If ``Q`` is not positive.
        InsufficientEventsError: With fewer than two events.
    """
    if not Q > 0:
        raise DomainError(f"loss threshold Q must be positive, got {Q}")
    values = np.asarray(returns, dtype=np.float64)
    event_days = np.flatnonzero(values < -Q).astype(np.int64)
    if event_days.size < 2:
        raise InsufficientEventsError(int(event_days.size), 2)
    return _analysis(Q, event_days, np.diff(event_days))


def combine_loss_analyses(analyses: Sequence[LossAnalysis]) -> LossAnalysis:
    """Pool per-replica analyses that share one threshold.

    Event days are offset so replicas follow one another; interoccurrence
    times are pooled replica by replica, so no gap spans two replicas.
    """
    if not analyses:
        raise InsufficientEventsError(0, 2)
    if len(analyses) == 1:
        return analyses[0]

    days, gaps = [], []
    offset = 0
    for item in analyses:
        days.append(item.event_days + offset)
        gaps.append(item.inter_times)
        offset += int(item.event_days[-1]) + 1
    return _analysis(analyses[0].Q, np.concatenate(days), np.concatenate(gaps))


def _cut_above(values: np.ndarray, index: int) -> float:
    """Return a cut strictly between ``values[index] < 0`` and the next larger value.

    The margin is relative, so rescaling the series by any positive constant
    keeps every value on the same side of the rescaled cut.
    """
    value = values[index]
    cut = value * (1.0 - CUT_MARGIN)
    above = np.searchsorted(values, value, side="right")
    if above < values.size:
        cut = min(cut, 0.5 * (value + values[above]))
    if not cut > value:
        cut = float(np.nextafter(value, np.inf))
    return float(cut)


def calibrate_Q(
    returns: Sequence[float] | np.ndarray,
    target_RQ: float,
    tolerance: float = DEFAULT_RQ_TOLERANCE,
) -> float:
    """Choose ``Q`` so that a fraction ``1 / target_RQ`` of days are losses.

    With ``k = floor(days / target_RQ)`` the threshold sits just above the
    ``k``-th smallest return, so exactly the ``k`` lowest returns (plus ties)
    fall below ``-Q``. When that return is not negative, as happens at short
    targets on a coarse return grid, every negative return becomes a loss and
    the target is kept if ``days / losses`` lies within *tolerance* of it.

    Raises:
        CalibrationError: If no positive threshold achieves the target.
    """
    values = np.sort(np.asarray(returns, dtype=np.float64))
    if values.size == 0:
        raise CalibrationError("cannot calibrate a threshold on an empty return series")
    if target_RQ < 1:
        raise CalibrationError(f"target R_Q must be >= 1, got {target_RQ}")

    k = int(np.floor(values.size / target_RQ))
    if k < 1:
        raise CalibrationError(
            f"target R_Q={target_RQ} exceeds the {values.size}-day series"
        )
    if values[k - 1] < 0:
        return -_cut_above(values, k - 1)

    losses = int(np.count_nonzero(values < 0))
    if losses == 0 or not achieved_rq_ok(values.size / losses, target_RQ, tolerance):
        raise CalibrationError(
            f"the 1/{target_RQ:g} return quantile is not a loss "
            f"({values[k - 1]:.6g}) and the {losses} negative returns give "
            f"R_Q={values.size / max(losses, 1):.3g}; no positive threshold exists"
        )
    return -_cut_above(values, losses - 1)


def achieved_rq_ok(achieved: float, target: float, tolerance: float) -> bool:
    """Return True when *achieved* lies within ``tolerance`` of *target*."""
    return abs(achieved - target) <= tolerance * target
