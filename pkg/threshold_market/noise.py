"""Private-opinion noise sources.

The default source is a two-sided discrete Weierstrass hierarchy: a level
``j >= 0`` is drawn with probability ``(1 - 1/K) * K**-j``, the magnitude is
``b0 * b**j`` and the sign is an independent fair coin. The magnitude tail
``P(|eps| >= b0 * b**j) = K**-j`` is Pareto with exponent ``ln K / ln b``.

Any object with a ``sample(rng, size)`` method can stand in for it; the
dynamics never look past that interface.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .const import LEVEL_CAP
from .dataclass import WmNoiseParams


class NoiseSource(Protocol):  # pylint: disable=too-few-public-methods
    """Anything that can draw a vector of private opinions."""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Return *size* noise values as a float array."""


def _check(params: WmNoiseParams):
    if not (params.K > 1 and params.b > 1 and params.b0 > 0):
        raise ValueError(f"invalid noise parameters: {params}")


def level_probability(params: WmNoiseParams, j: int) -> float:
    """Return ``P(level == j) = (1 - 1/K) * K**-j``."""
    return (1.0 - 1.0 / params.K) * params.K ** (-j)


def level_ccdf(params: WmNoiseParams, j: int) -> float:
    """Return ``P(level >= j) = K**-j``, equal to ``P(|eps| >= b0 * b**j)``."""
    return params.K ** (-j)


def pareto_exponent(params: WmNoiseParams) -> float:
    """Return the tail exponent ``ln K / ln b``."""
    return params.pareto_exponent


def second_moment(params: WmNoiseParams) -> float:
    """Return ``E[eps**2] = b0**2 (1 - 1/K) / (1 - b**2/K)``.

    Raises:
        ValueError: When ``b**2 >= K`` (the variance is infinite).
    """
    ratio = params.b**2 / params.K
    if ratio >= 1:
        raise ValueError(
            f"infinite variance for K={params.K}, b={params.b} (b**2 >= K)"
        )
    return params.b0**2 * (1.0 - 1.0 / params.K) / (1.0 - ratio)


def sample_levels(
    params: WmNoiseParams, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Draw *size* hierarchy levels, capped at ``LEVEL_CAP``."""
    _check(params)
    levels = rng.geometric(1.0 - 1.0 / params.K, size=size) - 1
    return np.minimum(levels, LEVEL_CAP)


def sample_level(params: WmNoiseParams, rng: np.random.Generator) -> int:
    """Draw a single hierarchy level ``j``."""
    return int(sample_levels(params, rng, 1)[0])


class WeierstrassNoise:
    """Symmetric discrete Weierstrass-hierarchy sampler."""

    def __init__(self, params: WmNoiseParams):
        _check(params)
        self.params = params
        self._magnitudes = params.b0 * params.b ** np.arange(
            LEVEL_CAP + 1, dtype=np.float64
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw *size* noise values: levels first, then signs."""
        levels = sample_levels(self.params, rng, size)
        signs = rng.integers(0, 2, size=size, dtype=np.int8) * 2 - 1
        return self._magnitudes[levels] * signs

    def __repr__(self) -> str:
        return f"WeierstrassNoise({self.params!r})"


class ConstantNoise:  # pylint: disable=too-few-public-methods
    """Deterministic stand-in that returns the same value for every drawing."""

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Return *size* copies of the constant (the stream is not touched)."""
        del rng
        return np.full(size, self.value, dtype=np.float64)

    def __repr__(self) -> str:
        return f"ConstantNoise({self.value!r})"


def sample_noise(params: WmNoiseParams, rng: np.random.Generator) -> float:
    """Draw a single private opinion."""
    return float(WeierstrassNoise(params).sample(rng, 1)[0])
