"""Tests for threshold_market.dynamics.lattice and the compiled round kernel."""

from math import inf
from unittest.mock import MagicMock

import numpy as np
from pytest import mark, raises

from threshold_market.dataclass import CouplingSpec, DynamicsParams, WmNoiseParams
from threshold_market.dynamics.lattice import (
    advance,
    draw_batch,
    drawing,
    init_lattice,
    lattice_from_spins,
    recompute_sum,
    restore,
    run_round,
    snapshot,
)
from threshold_market.dynamics.rules import magnetization
from threshold_market.noise import ConstantNoise, WeierstrassNoise


class CyclingNoise:  # pylint: disable=too-few-public-methods
    """Stub noise that cycles through fixed values without touching the stream."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        self.pos = 0

    def sample(self, rng, size):
        """Return the next *size* values of the cycle."""
        del rng
        idx = (self.pos + np.arange(size)) % self.values.size
        self.pos += size
        return self.values[idx]


def _reference(spins, n, sites, eps, J, lam, freeze_round=False):
    """Evaluate the update rule straight from its definition, drawing by drawing."""
    grid = [int(s) for s in spins]
    N = n * n
    changes = []
    frozen = abs(sum(grid))
    for k, (site, e) in enumerate(zip(sites, eps)):
        if k % N == 0:
            frozen = abs(sum(grid))
        row, col = divmod(int(site), n)
        impact = J * float(
            grid[((row - 1) % n) * n + col]
            + grid[((row + 1) % n) * n + col]
            + grid[row * n + (col - 1) % n]
            + grid[row * n + (col + 1) % n]
        )
        m_abs = frozen if freeze_round else abs(sum(grid))
        Y = lam * (m_abs / N)
        x = impact + float(e)
        if x < -Y:
            new = -1
        elif x < Y:
            new = 0
        else:
            new = 1
        changes.append(new - grid[site])
        grid[site] = new
    return np.array(grid, dtype=np.int8), np.array(changes, dtype=np.int64)


def _fixed_site_rng(site):
    rng = MagicMock()
    rng.integers.return_value = site
    return rng


class TestLatticeLifecycle:
    """Tests for lattice construction, snapshots and the cached sum."""

    def test_init_lattice_is_seeded(self):
        """Same seed gives the same random initial state."""
        a = init_lattice(8, np.random.default_rng(1))
        b = init_lattice(8, np.random.default_rng(1))
        assert np.array_equal(a.spins, b.spins)
        assert a.sum_spins == recompute_sum(a)
        assert set(np.unique(a.spins)) <= {-1, 0, 1}

    def test_init_lattice_rejects_empty(self, rng):
        """A lattice needs at least one site."""
        with raises(ValueError):
            init_lattice(0, rng)

    def test_lattice_from_spins_validates(self):
        """Non-square sizes and foreign spin values are rejected."""
        with raises(ValueError):
            lattice_from_spins([0, 1, 0])
        with raises(ValueError):
            lattice_from_spins([0, 2, 0, 1])

    def test_snapshot_restore(self, rng):
        """A restored snapshot equals the original and does not alias it."""
        lattice = init_lattice(4, rng)
        lattice.drawings_done = 17
        snap = snapshot(lattice)
        copy = restore(snap)
        assert np.array_equal(copy.spins, lattice.spins)
        assert copy.sum_spins == lattice.sum_spins
        assert copy.drawings_done == 17
        copy.spins[0] = -copy.spins[0] if copy.spins[0] else 1
        assert np.array_equal(snap.as_array(), lattice.spins)

    @mark.parametrize("spins, expected", [([1] * 1024, 1.0), ([0] * 1024, 0.0), ([1, -1] * 512, 0.0)])
    def test_magnetization_examples(self, spins, expected):
        """Aligned, neutral and balanced lattices."""
        assert magnetization(lattice_from_spins(spins)) == expected


class TestDrawing:
    """Tests for a single drawing."""

    def test_zero_lattice_positive_noise(self):
        """All-zero 2x2 lattice with eps=+0.2: the spin buys and M becomes 1/4."""
        lattice = lattice_from_spins([0, 0, 0, 0])
        record = drawing(
            lattice, DynamicsParams(lam=2.0), CouplingSpec(), ConstantNoise(0.2), _fixed_site_rng(3)
        )
        assert (record.site, record.old_spin, record.new_spin) == (3, 0, 1)
        assert magnetization(lattice) == 0.25
        assert lattice.drawings_done == 1

    @mark.parametrize("eps, expected", [(0.0, 1), (-0.1, -1), (0.7, 1)])
    def test_zero_magnetization_never_neutral(self, eps, expected):
        """At M = 0 the neutral band is empty."""
        lattice = lattice_from_spins([0] * 9)
        record = drawing(
            lattice, DynamicsParams(lam=2.0), CouplingSpec(), ConstantNoise(eps), _fixed_site_rng(4)
        )
        assert record.new_spin == expected

    def test_aligned_neighbours_buy(self):
        """Four +1 neighbours, J=1, lambda=2, M=1/4 and eps=0 give +1."""
        spins = np.zeros(16, dtype=np.int8)
        spins[[1, 4, 6, 9]] = 1
        lattice = lattice_from_spins(spins)
        record = drawing(
            lattice, DynamicsParams(lam=2.0), CouplingSpec(), ConstantNoise(0.0), _fixed_site_rng(5)
        )
        assert record.new_spin == 1
        assert lattice.sum_spins == 5

    def test_explicit_threshold_magnetization(self):
        """A supplied magnetization overrides the current one in the threshold."""
        lattice = lattice_from_spins([0, 0, 0, 0])
        record = drawing(
            lattice,
            DynamicsParams(lam=2.0),
            CouplingSpec(),
            ConstantNoise(0.2),
            _fixed_site_rng(0),
            threshold_m=0.5,
        )
        assert record.new_spin == 0

    def test_sum_stays_exact(self, rng):
        """After many drawings the cached sum equals a fresh recount."""
        lattice = init_lattice(6, rng)
        noise = WeierstrassNoise(WmNoiseParams())
        previous = lattice.sum_spins
        for _ in range(2000):
            drawing(lattice, DynamicsParams(), CouplingSpec(), noise, rng)
            assert abs(lattice.sum_spins - previous) <= 2
            previous = lattice.sum_spins
        assert lattice.sum_spins == recompute_sum(lattice)


class TestRounds:
    """Tests for run_round and the compiled kernel."""

    def test_run_round_counts_drawings(self, rng):
        """A round on a 32x32 lattice performs exactly 1024 drawings."""
        lattice = init_lattice(32, rng)
        summary = run_round(
            lattice, DynamicsParams(), CouplingSpec(), WeierstrassNoise(WmNoiseParams()), rng
        )
        assert lattice.drawings_done == 1024
        assert -1.0 <= summary.magnetization <= 1.0
        assert (summary.magnetization * 1024).is_integer()
        assert lattice.sum_spins == recompute_sum(lattice)

    def test_run_round_reproducible(self):
        """Same seed and stubbed noise give bit-identical rounds."""
        outcomes = []
        for _ in range(2):
            gen = np.random.default_rng(7)
            lattice = init_lattice(5, gen)
            for _ in range(20):
                run_round(lattice, DynamicsParams(), CouplingSpec(), ConstantNoise(0.1), gen)
            outcomes.append(lattice.spins.copy())
        assert np.array_equal(outcomes[0], outcomes[1])

    @mark.parametrize("n", [2, 3])
    @mark.parametrize("freeze", ["drawing", "round"])
    def test_matches_reference_evaluator(self, n, freeze):
        """The kernel reproduces the definition drawing by drawing."""
        gen = np.random.default_rng(99 + n)
        lattice = init_lattice(n, gen)
        start = lattice.spins.copy()
        N = n * n
        rounds = 1200 // N + 1
        noise = CyclingNoise([0.2, -0.35, 0.0, 1.6, -0.8, 0.05, -1.2, 0.4, -0.05])
        sites, eps = draw_batch(noise, gen, N, rounds * N)
        params = DynamicsParams(lam=2.0, threshold_freeze=freeze)
        sums = np.empty(rounds, dtype=np.int64)
        changes = np.empty(rounds, dtype=np.int64)
        activity = np.zeros(rounds * N, dtype=np.int8)

        done, trapped = advance(
            lattice, params, CouplingSpec(J=1.0), sites, eps, 0, rounds, sums, changes, inf, activity
        )

        final, expected = _reference(start, n, sites, eps, 1.0, 2.0, freeze == "round")
        assert (done, trapped) == (rounds, False)
        assert np.array_equal(activity.astype(np.int64), expected)
        assert np.array_equal(lattice.spins, final)
        assert lattice.sum_spins == int(final.sum())
        assert changes.sum() == np.count_nonzero(expected)

    def test_kernel_stops_at_trap(self):
        """With m_trap reached the kernel returns after the trapping round."""
        lattice = lattice_from_spins([0, 0, 0, 0])
        sites = np.array([0, 1, 2, 3] * 3, dtype=np.int64)
        eps = np.full(12, 5.0)
        sums = np.empty(3, dtype=np.int64)
        changes = np.empty(3, dtype=np.int64)
        done, trapped = advance(
            lattice, DynamicsParams(), CouplingSpec(), sites, eps, 0, 3, sums, changes, 1.0
        )
        assert (done, trapped) == (1, True)
        assert sums[0] == 4
        assert lattice.drawings_done == 4

    def test_non_finite_noise_fails_fast(self):
        """An infinite private opinion is a contract violation."""
        lattice = lattice_from_spins([0, 0, 0, 0])
        sites = np.zeros(4, dtype=np.int64)
        eps = np.array([np.inf, 0.0, 0.0, 0.0])
        with raises(ValueError):
            advance(
                lattice,
                DynamicsParams(),
                CouplingSpec(),
                sites,
                eps,
                0,
                1,
                np.empty(1, dtype=np.int64),
                np.empty(1, dtype=np.int64),
            )
