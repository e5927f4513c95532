"""Lattice lifecycle and the drawing / round operations.

A drawing picks one site uniformly at random (with replacement), draws the
agent's private opinion from the noise source and sets the spin to
``threshold_sign(local_impact + eps, lam * |M|)``. A round is ``N`` drawings and
is the model's unit of time.
"""

from __future__ import annotations

from math import inf
from typing import Optional, Tuple

import numpy as np

from ..const import SPIN_VALUES
from ..dataclass import (
    CouplingSpec,
    DrawingRecord,
    DynamicsParams,
    LatticeSnapshot,
    LatticeState,
    RoundSummary,
)
from ..noise import NoiseSource
from .kernel import run_rounds
from .rules import local_impact, magnetization, neighbor_table, threshold_sign


def random_spins(n_agents: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_agents`` i.i.d. spins uniformly from ``{-1, 0, +1}``."""
    return rng.integers(-1, 2, size=n_agents, dtype=np.int8)


def init_lattice(n: int, rng: np.random.Generator) -> LatticeState:
    """Create an ``n x n`` lattice in a random (paramagnetic) state."""
    if n < 1:
        raise ValueError(f"lattice size must be positive, got {n}")
    spins = random_spins(n * n, rng)
    return LatticeState(spins=spins, n=n, sum_spins=int(spins.sum()))


def lattice_from_spins(spins, n: Optional[int] = None) -> LatticeState:
    """Build a lattice from an explicit spin sequence (row-major).

    Raises:
        ValueError: If the spins are not a square number of values in
            ``{-1, 0, +1}``.
    """
    values = np.asarray(spins, dtype=np.int8).ravel().copy()
    if n is None:
        n = int(round(values.size**0.5))
    if n * n != values.size:
        raise ValueError(f"{values.size} spins do not form an {n}x{n} lattice")
    if not np.isin(values, SPIN_VALUES).all():
        raise ValueError("spins must take values in {-1, 0, +1}")
    return LatticeState(spins=values, n=n, sum_spins=int(values.sum()))


def snapshot(lattice: LatticeState) -> LatticeSnapshot:
    """Return an immutable copy of *lattice*."""
    return LatticeSnapshot(
        spins=lattice.spins.tobytes(),
        n=lattice.n,
        sum_spins=lattice.sum_spins,
        drawings_done=lattice.drawings_done,
    )


def restore(snap: LatticeSnapshot) -> LatticeState:
    """Rebuild a mutable lattice from a snapshot."""
    return LatticeState(
        spins=snap.as_array(),
        n=snap.n,
        sum_spins=snap.sum_spins,
        drawings_done=snap.drawings_done,
    )


def recompute_sum(lattice: LatticeState) -> int:
    """Return the spin sum recomputed from scratch."""
    return int(lattice.spins.sum())


def draw_batch(
    noise_source: NoiseSource,
    rng: np.random.Generator,
    n_agents: int,
    size: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Pre-draw *size* site indices followed by *size* noise values.

    The order (sites first, then noise) is part of the reproducibility
    contract of every compiled run.
    """
    sites = rng.integers(0, n_agents, size=size, dtype=np.int64)
    eps = np.ascontiguousarray(noise_source.sample(rng, size), dtype=np.float64)
    return sites, eps


def drawing(
    lattice: LatticeState,
    params: DynamicsParams,
    coupling: CouplingSpec,
    noise_source: NoiseSource,
    rng: np.random.Generator,
    threshold_m: Optional[float] = None,
) -> DrawingRecord:
    """Perform a single drawing in place.

    Args:
        lattice: Lattice to update.
        params: Threshold amplitude.
        coupling: Coupling strength.
        noise_source: Private-opinion sampler.
        rng: Random stream for site choice and noise.
        threshold_m: Magnetization feeding the threshold; defaults to the
            magnetization before this drawing.

    Returns:
        The chosen site with its old and new spin.
    """
    site = int(rng.integers(0, lattice.n_agents))
    eps = float(noise_source.sample(rng, 1)[0])
    m = magnetization(lattice) if threshold_m is None else threshold_m
    new = threshold_sign(local_impact(lattice, coupling, site) + eps, params.lam * abs(m))
    old = int(lattice.spins[site])
    if new != old:
        lattice.spins[site] = new
        lattice.sum_spins += new - old
    lattice.drawings_done += 1
    return DrawingRecord(site=site, old_spin=old, new_spin=new)


def advance(
    lattice: LatticeState,
    params: DynamicsParams,
    coupling: CouplingSpec,
    sites: np.ndarray,
    eps: np.ndarray,
    start: int,
    rounds: int,
    sums_out: np.ndarray,
    changes_out: np.ndarray,
    m_trap: float = inf,
    activity: Optional[np.ndarray] = None,
) -> Tuple[int, bool]:
    """Run up to *rounds* compiled rounds on pre-drawn randomness.

    Returns:
        ``(rounds_done, trapped)``; ``trapped`` means the last completed round
        ended with ``|M| >= m_trap``.
    """
    if activity is None:
        activity = np.empty(0, dtype=np.int8)
    done, total, trapped = run_rounds(
        lattice.spins,
        neighbor_table(lattice.n),
        sites,
        eps,
        start,
        rounds,
        float(coupling.J),
        float(params.lam),
        lattice.sum_spins,
        params.threshold_freeze == "round",
        float(m_trap),
        sums_out,
        changes_out,
        activity,
    )
    lattice.sum_spins = int(total)
    lattice.drawings_done += int(done) * lattice.n_agents
    return int(done), bool(trapped)


def run_round(
    lattice: LatticeState,
    params: DynamicsParams,
    coupling: CouplingSpec,
    noise_source: NoiseSource,
    rng: np.random.Generator,
) -> RoundSummary:
    """Execute exactly ``N`` sequential drawings and summarize the round."""
    n_agents = lattice.n_agents
    sites, eps = draw_batch(noise_source, rng, n_agents, n_agents)
    sums = np.empty(1, dtype=np.int64)
    changes = np.empty(1, dtype=np.int64)
    advance(lattice, params, coupling, sites, eps, 0, 1, sums, changes)
    return RoundSummary(magnetization=magnetization(lattice), changes=int(changes[0]))
