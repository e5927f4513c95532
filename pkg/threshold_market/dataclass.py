"""Shared dataclasses used across Threshold Market modules.

Parameter objects are frozen; ``LatticeState`` is the single mutable container
and is owned by exactly one simulation loop at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log
from typing import Optional, Tuple

import numpy as np

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
)
from .errors import MarketError


@dataclass(frozen=True)
class CouplingSpec:
    """Uniform nearest-neighbour coupling.

    Attributes:
        J: Interaction strength shared by the four neighbours of every site.
    """

    J: float = DEFAULT_COUPLING


@dataclass(frozen=True)
class DynamicsParams:
    """Update-rule control parameters.

    Attributes:
        lam: Threshold amplitude; the neutral band is ``lam * |M|``.
        threshold_freeze: ``"drawing"`` uses the magnetization current at each
            drawing, ``"round"`` freezes it at the start of every round.
    """

    lam: float = DEFAULT_LAMBDA
    threshold_freeze: str = "drawing"


@dataclass(frozen=True)
class WmNoiseParams:
    """Weierstrass-hierarchy noise parameters.

    Attributes:
        K: Level-probability base; level ``j`` has weight ``K**-j``.
        b: Magnitude base; level ``j`` has magnitude ``b0 * b**j``.
        b0: Base magnitude.
    """

    K: float = DEFAULT_K
    b: float = DEFAULT_B
    b0: float = DEFAULT_B0

    @property
    def pareto_exponent(self) -> float:
        """Tail exponent ``ln K / ln b`` of the magnitude distribution."""
        return log(self.K) / log(self.b)


@dataclass(frozen=True)
class MarketParams:
    """Price-formation and trap-handling parameters.

    Attributes:
        Lambda: Depth of market. ``0`` means "use the number of agents".
        tau: Trading-day length in rounds.
        m_trap: Ferromagnetic-trap threshold on ``|M|``.
        record_activity: Keep per-drawing opinion changes for diagnostics.
    """

    Lambda: float = 0.0
    tau: int = DEFAULT_TAU
    m_trap: float = DEFAULT_M_TRAP
    record_activity: bool = False

    def depth(self, n_agents: int) -> float:
        """Return the effective depth of market for ``n_agents`` agents."""
        return float(n_agents) if self.Lambda == 0 else float(self.Lambda)


@dataclass(frozen=True)
class ModelParams:
    """Lattice parameters.

    Attributes:
        n: Linear lattice size; the lattice holds ``n * n`` agents.
        J: Coupling strength.
        lam: Threshold amplitude.
    """

    n: int = DEFAULT_LINEAR_SIZE
    J: float = DEFAULT_COUPLING
    lam: float = DEFAULT_LAMBDA

    @property
    def n_agents(self) -> int:
        """Number of agents ``N = n * n``."""
        return self.n * self.n


@dataclass(frozen=True)
class RunParams:
    """Experiment schedule.

    Attributes:
        warmup_rounds: Rounds discarded before the first price sample.
        total_days: Number of recorded trading days.
        seed: Root seed of all replica RNG streams.
        replicas: Number of independent lattices.
        workers: Worker processes used for replicas.
        min_events: Minimum loss events at the largest target R_Q before the
            run length is doubled once.
    """

    warmup_rounds: int = 100
    total_days: int = 20000
    seed: int = 12345
    replicas: int = 1
    workers: int = 1
    min_events: int = 100


@dataclass(frozen=True)
class AnalysisParams:
    """Interoccurrence analysis settings.

    Attributes:
        target_rq: Mean interoccurrence times to calibrate thresholds for.
        q0: Directional coefficient of the ``q(R_Q)`` law.
        beta_plateau: Plateau value of the q-exponential rate.
        rq_tolerance: Relative tolerance of the achieved R_Q after calibration.
    """

    target_rq: Tuple[float, ...] = DEFAULT_TARGET_RQ
    q0: float = DEFAULT_Q0
    beta_plateau: float = DEFAULT_BETA_PLATEAU
    rq_tolerance: float = DEFAULT_RQ_TOLERANCE


@dataclass(frozen=True)
class LogSettings:
    """Logging facade settings."""

    enable_logging: bool = True
    log_file: str = "threshold-market.log"
    level: str = "INFO"
    clear_log: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment configuration."""

    model: ModelParams = field(default_factory=ModelParams)
    noise: WmNoiseParams = field(default_factory=WmNoiseParams)
    market: MarketParams = field(default_factory=MarketParams)
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    run: RunParams = field(default_factory=RunParams)
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    logging: LogSettings = field(default_factory=LogSettings)
    output_dir: str = "results"
    write_rounds: bool = True

    @property
    def coupling(self) -> CouplingSpec:
        """Coupling specification derived from the model section."""
        return CouplingSpec(J=self.model.J)


@dataclass
class LatticeState:
    """The ``n x n`` grid of three-state spins (row-major) plus cached counters.

    Attributes:
        spins: ``int8`` array of length ``n * n`` with values in ``{-1, 0, 1}``.
        n: Linear size.
        sum_spins: Cached exact sum of ``spins``.
        drawings_done: Number of single-site drawings performed so far.
    """

    spins: np.ndarray
    n: int
    sum_spins: int
    drawings_done: int = 0

    @property
    def n_agents(self) -> int:
        """Number of agents ``N``."""
        return self.n * self.n


@dataclass(frozen=True)
class LatticeSnapshot:
    """Immutable copy of a lattice for checkpointing and inspection."""

    spins: bytes
    n: int
    sum_spins: int
    drawings_done: int

    def as_array(self) -> np.ndarray:
        """Return the spins as a fresh ``int8`` array."""
        return np.frombuffer(self.spins, dtype=np.int8).copy()


@dataclass(frozen=True)
class DrawingRecord:
    """Outcome of one drawing."""

    site: int
    old_spin: int
    new_spin: int


@dataclass(frozen=True)
class ActivityRecord:
    """Opinion change of one agent between consecutive drawings of that agent.

    Attributes:
        site: Agent index.
        d: ``s_new - s_old``; positive is demand, negative is supply.
    """

    site: int
    d: int


@dataclass(frozen=True)
class RoundSummary:
    """Result of one round of ``N`` drawings."""

    magnetization: float
    changes: int


@dataclass(frozen=True)
class ResetRecord:
    """A market-maker reset.

    Attributes:
        round_index: Recorded round at whose end the trap was detected.
        pre_reset_m: Magnetization that triggered the reset.
    """

    round_index: int
    pre_reset_m: float


@dataclass(frozen=True, eq=False)
class SimulationRecord:
    """Raw output of a simulated stretch of rounds.

    Attributes:
        sums: Spin sum at round 0 (before the first recorded round) followed by
            the spin sum after every recorded round.
        changes: Opinion changes per recorded round.
        resets: Resets that happened during the recorded rounds.
        snapshots: Lattice snapshots at day boundaries (when requested).
        activity: Per-drawing opinion changes (when recorded).
        activity_sites: Site drawn at every recorded drawing (when recorded).
        warmup_resets: Resets that happened during warmup.
    """

    sums: np.ndarray
    changes: np.ndarray
    resets: Tuple[ResetRecord, ...]
    snapshots: Tuple[LatticeSnapshot, ...] = ()
    activity: Optional[np.ndarray] = None
    activity_sites: Optional[np.ndarray] = None
    warmup_resets: int = 0


@dataclass(frozen=True, eq=False)
class MarketSeries:
    """Per-round magnetization and per-day price series of one run.

    Attributes:
        magnetization_per_round: ``M`` at round 0 and after each recorded round.
        log_price: ``ln P`` at day 0 and at the end of every day.
        returns: Daily log returns; ``returns[k] = log_price[k+1] - log_price[k]``.
        resets: Reset log.
    """

    magnetization_per_round: np.ndarray
    log_price: np.ndarray
    returns: np.ndarray
    resets: Tuple[ResetRecord, ...] = ()


@dataclass(frozen=True, eq=False)
class LossAnalysis:
    """Loss events below ``-Q`` and their interoccurrence statistics.

    Attributes:
        Q: Loss threshold magnitude.
        event_days: Day indices with ``return < -Q``.
        inter_times: Days between consecutive events.
        R_Q: Mean interoccurrence time.
        pq_r: Support of the empirical mass function.
        pq: Probability mass on ``pq_r``; sums to one.
    """

    Q: float
    event_days: np.ndarray
    inter_times: np.ndarray
    R_Q: float
    pq_r: np.ndarray
    pq: np.ndarray

    @property
    def n_events(self) -> int:
        """Number of loss events."""
        return int(self.event_days.size)


@dataclass(frozen=True, eq=False)
class LogBins:
    """Log-spaced integer bins of interoccurrence times.

    Bin ``k`` covers the integers ``lower[k] .. upper[k] - 1``.
    """

    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def widths(self) -> np.ndarray:
        """Number of integers per bin."""
        return self.upper - self.lower

    @property
    def centers(self) -> np.ndarray:
        """Geometric centre of every bin."""
        return np.sqrt(self.lower * (self.upper - 1.0))

    @property
    def empirical(self) -> np.ndarray:
        """Empirical probability mass per integer ``r`` in every bin."""
        return self.counts / (self.total * self.widths)


@dataclass(frozen=True)
class QExpFit:
    """Fitted q-exponential.

    Attributes:
        q: Tsallis parameter.
        beta_scale: q-exponential rate (1/days); unrelated to the noise tail
            exponent.
        q0: Directional coefficient of the q(R_Q) law the fit is compared with.
        rms_log_residual: Root-mean-square log residual over the fitted bins.
        r_max: Upper end of the discrete normalization support.
        n_bins: Number of bins used.
        n_samples: Number of interoccurrence samples.
    """

    q: float
    beta_scale: float
    q0: float
    rms_log_residual: float
    r_max: int = 0
    n_bins: int = 0
    n_samples: int = 0


@dataclass(frozen=True, eq=False)
class RqResult:
    """Analysis outcome for one target mean interoccurrence time."""

    target_rq: float
    Q: float
    analysis: Optional[LossAnalysis]
    bins: Optional[LogBins]
    fit: Optional[QExpFit]
    error: Optional[MarketError] = None


@dataclass(frozen=True)
class QLawFit:
    """Linear regression of fitted ``q`` against ``ln(R_Q / 2)``.

    Attributes:
        slope: Estimate of the directional coefficient ``q0``.
        intercept: Value at ``R_Q = 2``; one under the logarithmic law.
        r_value: Correlation coefficient.
        n_points: Number of ``R_Q`` values regressed.
    """

    slope: float
    intercept: float
    r_value: float
    n_points: int


@dataclass(frozen=True, eq=False)
class ReplicaRun:
    """Market series and diagnostics of one simulated replica.

    Attributes:
        index: Replica number; selects the RNG stream.
        series: Magnetization, price and return series.
        warmup_resets: Resets during warmup (not part of the series).
        activity: Per-drawing opinion changes (when recorded).
        activity_sites: Site of every recorded drawing (when recorded).
        demand: Sum of positive opinion changes.
        supply: Magnitude of the sum of negative opinion changes.
    """

    index: int
    series: MarketSeries
    warmup_resets: int = 0
    activity: Optional[np.ndarray] = None
    activity_sites: Optional[np.ndarray] = None
    demand: int = 0
    supply: int = 0

    @property
    def days(self) -> int:
        """Number of recorded trading days."""
        return int(self.series.returns.size)


@dataclass(frozen=True, eq=False)
class ExperimentBundle:
    """Everything an experiment produced.

    Attributes:
        config: Configuration the bundle was produced from.
        output_dir: Directory holding the written files.
        replicas: Per-replica runs in replica order; empty for re-analysis of
            stored returns.
        results: One entry per target R_Q, in configured order.
        q_law: Regression of fitted q against ``ln(R_Q / 2)``.
        beta_plateau: Mean fitted rate over the plateau region.
        total_days: Days simulated per replica (after any extension).
        extended: True when the run length was doubled for lack of events.
        wall_time: Seconds spent producing the bundle.
        files: Written files relative to ``output_dir``.
    """

    config: ExperimentConfig
    output_dir: str
    replicas: Tuple[ReplicaRun, ...]
    results: Tuple[RqResult, ...]
    q_law: Optional[QLawFit] = None
    beta_plateau: Optional[float] = None
    total_days: int = 0
    extended: bool = False
    wall_time: float = 0.0
    files: Tuple[str, ...] = ()
