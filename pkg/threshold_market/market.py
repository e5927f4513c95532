"""Price formation, trap handling and the recorded market run.

Prices follow the linear impact law: the log return over a trading day of
``tau`` rounds is the excess demand ``N * (M(t) - M(t - tau))`` divided by the
depth of market. Whenever a round ends in a ferromagnetic trap the market
maker redraws every opinion uniformly (a paramagnetic state); the jump stays in
the price stream.
"""

from __future__ import annotations

from math import log
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dataclass import (
    ActivityRecord,
    CouplingSpec,
    DynamicsParams,
    LatticeSnapshot,
    LatticeState,
    MarketParams,
    MarketSeries,
    ResetRecord,
    SimulationRecord,
)
from .dynamics.lattice import advance, draw_batch, random_spins, snapshot
from .dynamics.rules import magnetization
from .errors import ConfigError, InsufficientHistoryError
from .log import log_debug
from .noise import NoiseSource

BATCH_DRAWINGS = 1 << 20
GRID_TOLERANCE = 1e-9


def _check_magnetization(value: float, name: str):
    if not -1.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [-1, 1], got {value}")


def _grid_sum(M: float, N: int) -> Optional[int]:
    total = N * M
    nearest = round(total)
    return int(nearest) if abs(total - nearest) <= GRID_TOLERANCE * max(N, 1) else None


def excess_demand(M_now: float, M_then: float, N: int) -> float:
    """Return ``N * (M_now - M_then)``.

    Magnetizations on the ``1/N`` grid of a real lattice are differenced as
    exact spin sums; any other input goes through the formula unchanged.
    """
    _check_magnetization(M_now, "M_now")
    _check_magnetization(M_then, "M_then")
    now, then = _grid_sum(M_now, N), _grid_sum(M_then, N)
    if now is not None and then is not None:
        return float(now - then)
    return N * (M_now - M_then)


def log_return(ED: float, Lambda: float) -> float:
    """Return the log return ``ED / Lambda``.

    Raises:
        ConfigError: If the depth of market is not positive.
    """
    if not Lambda > 0:
        raise ConfigError(f"market.Lambda: Lambda > 0 (got {Lambda})")
    return ED / Lambda


def build_price_series(
    mag_per_round: Sequence[float] | np.ndarray,
    params: MarketParams,
    N: int,
    P0: float = 1.0,
    resets: Sequence[ResetRecord] = (),
) -> MarketSeries:
    """Sample ``M`` every ``tau`` rounds and integrate daily log returns.

    Args:
        mag_per_round: Magnetization at round 0 followed by the value after
            every round.
        params: Market parameters (``tau`` and depth of market).
        N: Number of agents.
        P0: Initial price.
        resets: Reset log carried into the series.

    Raises:
        InsufficientHistoryError: With fewer than ``2 * tau`` rounds.
        ConfigError: If ``P0`` or the depth of market is not positive.
    """
    mags = np.asarray(mag_per_round, dtype=np.float64)
    rounds = mags.size - 1
    tau = params.tau
    if rounds < 2 * tau:
        raise InsufficientHistoryError(
            f"price series needs at least {2 * tau} rounds of history, got {max(rounds, 0)}"
        )
    if not P0 > 0:
        raise ConfigError(f"P0 > 0 (got {P0})")

    days = rounds // tau
    day_sums = np.rint(mags[: days * tau + 1 : tau] * N).astype(np.int64)
    depth = params.depth(N)
    returns = np.array(
        [log_return(float(ed), depth) for ed in np.diff(day_sums)], dtype=np.float64
    )
    log_price = np.empty(days + 1, dtype=np.float64)
    log_price[0] = log(P0)
    log_price[1:] = log_price[0] + np.cumsum(returns)
    return MarketSeries(
        magnetization_per_round=mags,
        log_price=log_price,
        returns=returns,
        resets=tuple(resets),
    )


def direct_log_price(series: MarketSeries, N: int, depth: float, tau: int) -> np.ndarray:
    """Return ``ln P`` computed directly from the day-boundary magnetizations."""
    days = series.returns.size
    day_sums = np.rint(series.magnetization_per_round[: days * tau + 1 : tau] * N)
    return series.log_price[0] + (day_sums - day_sums[0]) / depth


def detect_trap(lattice: LatticeState, m_trap: float) -> bool:
    """Return True when ``|M| >= m_trap`` (a ferromagnetic trap)."""
    return abs(lattice.sum_spins) >= m_trap * lattice.n_agents


def market_maker_reset(
    lattice: LatticeState, rng: np.random.Generator, round_index: int = 0
) -> ResetRecord:
    """Redraw every spin uniformly from ``{-1, 0, +1}``.

    Returns:
        The reset log entry carrying the pre-reset magnetization.
    """
    pre = magnetization(lattice)
    lattice.spins[:] = random_spins(lattice.n_agents, rng)
    lattice.sum_spins = int(lattice.spins.sum())
    log_debug(f"Market-maker reset at round {round_index} (M={pre:+.4f})")
    return ResetRecord(round_index=round_index, pre_reset_m=pre)


def _simulate(
    lattice: LatticeState,
    dynamics: DynamicsParams,
    coupling: CouplingSpec,
    noise_source: NoiseSource,
    rng: np.random.Generator,
    rounds: int,
    m_trap: float,
    sums: np.ndarray,
    changes: np.ndarray,
    boundary: int = 0,
    snapshots: Optional[List[LatticeSnapshot]] = None,
    activity: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> List[ResetRecord]:
    """Run *rounds* rounds with a trap check after every round.

    ``sums[1 + r]`` and ``changes[r]`` receive the results of round ``r``;
    a reset overwrites the round's sum with the post-reset value. With a
    positive *boundary* batches never straddle a multiple of it and a snapshot
    is appended at each multiple.
    """
    n_agents = lattice.n_agents
    chunk = max(1, BATCH_DRAWINGS // n_agents)
    resets: List[ResetRecord] = []
    done = 0
    while done < rounds:
        span = min(chunk, rounds - done)
        if boundary > 0:
            span = min(span, boundary - done % boundary)
        sites, eps = draw_batch(noise_source, rng, n_agents, span * n_agents)
        act = None
        if activity is not None:
            lo, hi = done * n_agents, (done + span) * n_agents
            activity[1][lo:hi] = sites
            act = activity[0][lo:hi]

        offset = 0
        while offset < span:
            k, trapped = advance(
                lattice,
                dynamics,
                coupling,
                sites,
                eps,
                offset * n_agents,
                span - offset,
                sums[1 + done + offset :],
                changes[done + offset :],
                m_trap,
                act,
            )
            offset += k
            if trapped:
                index = done + offset
                resets.append(market_maker_reset(lattice, rng, index))
                sums[index] = lattice.sum_spins
        done += span
        if snapshots is not None and boundary > 0 and done % boundary == 0:
            snapshots.append(snapshot(lattice))
    return resets


def run_market(
    lattice: LatticeState,
    dynamics: DynamicsParams,
    coupling: CouplingSpec,
    market: MarketParams,
    noise_source: NoiseSource,
    rng: np.random.Generator,
    rounds: int,
    warmup_rounds: int = 0,
    keep_snapshots: bool = False,
) -> SimulationRecord:
    """Warm the lattice up, then record *rounds* rounds of market activity.

    Every round ends with a trap check; a trapped lattice is reset by the
    market maker. Warmup rounds are simulated the same way but not recorded.
    """
    n_agents = lattice.n_agents
    warmup_resets = 0
    if warmup_rounds > 0:
        scratch_sums = np.empty(warmup_rounds + 1, dtype=np.int64)
        scratch_changes = np.empty(warmup_rounds, dtype=np.int64)
        warmup_resets = len(
            _simulate(
                lattice,
                dynamics,
                coupling,
                noise_source,
                rng,
                warmup_rounds,
                market.m_trap,
                scratch_sums,
                scratch_changes,
            )
        )

    sums = np.empty(rounds + 1, dtype=np.int64)
    sums[0] = lattice.sum_spins
    changes = np.zeros(rounds, dtype=np.int64)
    snapshots: Optional[List[LatticeSnapshot]] = None
    if keep_snapshots:
        snapshots = [snapshot(lattice)]
    activity = None
    if market.record_activity:
        activity = (
            np.zeros(rounds * n_agents, dtype=np.int8),
            np.zeros(rounds * n_agents, dtype=np.int64),
        )

    resets = _simulate(
        lattice,
        dynamics,
        coupling,
        noise_source,
        rng,
        rounds,
        market.m_trap,
        sums,
        changes,
        boundary=market.tau,
        snapshots=snapshots,
        activity=activity,
    )
    return SimulationRecord(
        sums=sums,
        changes=changes,
        resets=tuple(resets),
        snapshots=tuple(snapshots or ()),
        activity=None if activity is None else activity[0],
        activity_sites=None if activity is None else activity[1],
        warmup_resets=warmup_resets,
    )


def series_from_record(
    record: SimulationRecord, market: MarketParams, N: int, P0: float = 1.0
) -> MarketSeries:
    """Build the price series of a recorded run."""
    return build_price_series(record.sums / N, market, N, P0, record.resets)


def activity_records(record: SimulationRecord) -> List[ActivityRecord]:
    """Return one record per drawing that changed an opinion."""
    if record.activity is None or record.activity_sites is None:
        return []
    changed = np.flatnonzero(record.activity)
    return [
        ActivityRecord(site=int(record.activity_sites[i]), d=int(record.activity[i]))
        for i in changed
    ]


def summarize_activity(record: SimulationRecord) -> Tuple[int, int]:
    """Return total demand (sum of positive changes) and supply (negative ones)."""
    if record.activity is None:
        return (0, 0)
    d = record.activity.astype(np.int64)
    return int(d[d > 0].sum()), int(-d[d < 0].sum())

