"""Compiled hot loop of the lattice dynamics.

The kernel consumes pre-drawn site indices and noise values, so all randomness
stays in the caller's ``numpy.random.Generator`` and trajectories depend only on
the seed. Arithmetic mirrors ``rules.threshold_sign`` / ``rules.local_impact``
term for term so compiled and interpreted paths agree bit for bit.
"""

from numba import njit
import numpy as np


@njit(cache=True)
def run_rounds(
    spins,
    neighbors,
    sites,
    noise,
    start,
    rounds,
    coupling,
    lam,
    sum_spins,
    freeze_round,
    m_trap,
    sums_out,
    changes_out,
    activity,
):  # pylint: disable=too-many-arguments,too-many-locals
    """Run up to *rounds* rounds of ``N`` drawings each, in place.

    Args:
        spins: ``int8`` spin array, updated in place.
        neighbors: ``(N, 4)`` neighbour index table.
        sites: Pre-drawn site indices.
        noise: Pre-drawn private-opinion noise, aligned with *sites*.
        start: Offset of the first drawing in *sites* / *noise*.
        rounds: Maximum number of rounds to run.
        coupling: Coupling strength ``J``.
        lam: Threshold amplitude.
        sum_spins: Exact spin sum on entry.
        freeze_round: Freeze ``|M|`` at round start instead of per drawing.
        m_trap: Trap threshold on ``|M|``; ``inf`` disables the check.
        sums_out: Receives the spin sum after each round.
        changes_out: Receives the number of opinion changes in each round.
        activity: Receives ``s_new - s_old`` per drawing (skipped when empty).

    Returns:
        ``(rounds_done, sum_spins, trapped)``. The loop stops early right after
        a round that ends with ``|M| >= m_trap``.
    """
    n_agents = spins.shape[0]
    record = activity.shape[0] > 0
    trap_sum = m_trap * n_agents
    pos = start
    for rnd in range(rounds):
        frozen = abs(sum_spins)
        changes = 0
        for _ in range(n_agents):
            i = sites[pos]
            total = (
                np.int64(spins[neighbors[i, 0]])
                + np.int64(spins[neighbors[i, 1]])
                + np.int64(spins[neighbors[i, 2]])
                + np.int64(spins[neighbors[i, 3]])
            )
            x = coupling * np.float64(total) + noise[pos]
            if not np.isfinite(x):
                raise ValueError("non-finite local field")
            if freeze_round:
                y = lam * (frozen / n_agents)
            else:
                y = lam * (abs(sum_spins) / n_agents)
            if x < -y:
                new = -1
            elif x < y:
                new = 0
            else:
                new = 1
            old = np.int64(spins[i])
            if new != old:
                spins[i] = new
                sum_spins += new - old
                changes += 1
            if record:
                activity[pos] = new - old
            pos += 1
        sums_out[rnd] = sum_spins
        changes_out[rnd] = changes
        if abs(sum_spins) >= trap_sum:
            return rnd + 1, sum_spins, True
    return rounds, sum_spins, False
