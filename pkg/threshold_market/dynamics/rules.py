"""Local rules of the threshold social-impact dynamics.

The lattice is a periodic ``n x n`` grid stored row-major; every site has
exactly four nearest neighbours (up, down, left, right).
"""

from __future__ import annotations

from functools import lru_cache
from math import isfinite

import numpy as np

from ..const import NEIGHBOR_COUNT
from ..dataclass import CouplingSpec, LatticeState


def threshold_sign(x: float, Y: float) -> int:
    """Three-state threshold characteristic.

    Returns ``-1`` if ``x < -Y``, ``0`` if ``-Y <= x < Y`` and ``+1`` if
    ``x >= Y``. With ``Y == 0`` the neutral band is empty.

    Raises:
        ValueError: If *x* or *Y* is not finite, or *Y* is negative.
    """
    if not (isfinite(x) and isfinite(Y)):
        raise ValueError(f"threshold_sign needs finite arguments, got x={x}, Y={Y}")
    if Y < 0:
        raise ValueError(f"threshold_sign needs Y >= 0, got {Y}")
    if x < -Y:
        return -1
    if x < Y:
        return 0
    return 1


@lru_cache(maxsize=32)
def _neighbor_table(n: int) -> np.ndarray:
    idx = np.arange(n * n, dtype=np.int64)
    row, col = np.divmod(idx, n)
    table = np.empty((n * n, NEIGHBOR_COUNT), dtype=np.int64)
    table[:, 0] = ((row - 1) % n) * n + col
    table[:, 1] = ((row + 1) % n) * n + col
    table[:, 2] = row * n + (col - 1) % n
    table[:, 3] = row * n + (col + 1) % n
    table.setflags(write=False)
    return table


def neighbor_table(n: int) -> np.ndarray:
    """Return the read-only ``(n*n, 4)`` table of periodic neighbour indices."""
    if n < 1:
        raise ValueError(f"lattice size must be positive, got {n}")
    return _neighbor_table(n)


def local_impact(lattice: LatticeState, coupling: CouplingSpec, i: int) -> float:
    """Return ``J`` times the sum of the four neighbour spins of site *i*.

    Raises:
        IndexError: If *i* is outside ``[0, N)``.
    """
    if not 0 <= i < lattice.n_agents:
        raise IndexError(f"site {i} outside lattice of {lattice.n_agents} agents")
    neighbors = neighbor_table(lattice.n)[i]
    return coupling.J * float(int(lattice.spins[neighbors].sum()))


def magnetization(lattice: LatticeState) -> float:
    """Return the mean opinion ``sum_spins / N``."""
    return lattice.sum_spins / lattice.n_agents

