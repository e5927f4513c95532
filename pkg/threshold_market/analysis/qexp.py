"""The Tsallis q-exponential law of interoccurrence times.

The kernel ``[1 + (q - 1) * beta * r] ** (-1 / (q - 1))`` reduces to
``exp(-beta * r)`` at ``q = 1``. Interoccurrence times are whole days, so the
law is normalized by discrete summation over ``r = 1 .. r_max``.
"""

from __future__ import annotations

from math import log

import numpy as np

from ..const import EXACT_SUM_SPAN
from ..errors import DomainError

_Q_ONE_TOL = 1e-12


def _check_params(q: float, beta_scale: float):
    if q < 1:
        raise DomainError(f"q-exponential needs q >= 1, got q={q}")
    if not beta_scale > 0:
        raise DomainError(f"q-exponential needs beta > 0, got beta={beta_scale}")


def _log_kernel(r: np.ndarray, q: float, beta_scale: float) -> np.ndarray:
    if q - 1.0 <= _Q_ONE_TOL:
        return -beta_scale * r
    bracket = (q - 1.0) * beta_scale * r
    if np.any(bracket <= -1.0):
        raise DomainError(
            f"q-exponential bracket is not positive for q={q}, beta={beta_scale}"
        )
    return -np.log1p(bracket) / (q - 1.0)


def q_exponential(r, q: float, beta_scale: float):
    """Evaluate the unnormalized q-exponential kernel.

    Args:
        r: Scalar or array of non-negative times.
        q: Tsallis parameter (``q >= 1``; ``q == 1`` is the exponential).
        beta_scale: Rate parameter.

    Returns:
        Kernel value(s), a float for scalar input.

    Raises:
        DomainError: For ``q < 1``, non-positive ``beta_scale`` or a
            non-positive bracket.
    """
    _check_params(q, beta_scale)
    values = np.exp(_log_kernel(np.asarray(r, dtype=np.float64), q, beta_scale))
    if np.ndim(values) == 0:
        return float(values)
    return values


def q_of_RQ(R_Q: float, q0: float) -> float:
    """Return ``1 + q0 * ln(R_Q / 2)``.

    Raises:
        DomainError: For ``R_Q < 2``.
    """
    if R_Q < 2:
        raise DomainError(f"q(R_Q) law needs R_Q >= 2, got {R_Q}")
    return 1.0 + q0 * log(R_Q / 2.0)


def _kernel_integral(a: float, b: float, q: float, beta_scale: float) -> float:
    """Return the integral of the kernel over ``[a, b]``."""
    if q - 1.0 <= _Q_ONE_TOL:
        return (np.exp(-beta_scale * a) - np.exp(-beta_scale * b)) / beta_scale
    c = (q - 1.0) * beta_scale
    if abs(q - 2.0) < 1e-9:
        return float(np.log1p(c * b) - np.log1p(c * a)) / c
    power = 1.0 - 1.0 / (q - 1.0)
    fa = np.exp(power * np.log1p(c * a))
    fb = np.exp(power * np.log1p(c * b))
    return float((fa - fb) / (beta_scale * (2.0 - q)))


def kernel_sum(lo: int, hi: int, q: float, beta_scale: float) -> float:
    """Return the kernel summed over the integers ``lo .. hi - 1``.

    The first ``EXACT_SUM_SPAN`` terms are summed exactly; the smooth remainder
    of very wide ranges uses the midpoint rule ``sum f(r) ~ integral over
    [r - 1/2, r + 1/2]``.
    """
    _check_params(q, beta_scale)
    if hi <= lo:
        return 0.0
    split = min(hi, lo + EXACT_SUM_SPAN)
    exact = float(
        np.exp(_log_kernel(np.arange(lo, split, dtype=np.float64), q, beta_scale)).sum()
    )
    if split == hi:
        return exact
    return exact + _kernel_integral(split - 0.5, hi - 0.5, q, beta_scale)


def normalization(r_max: int, q: float, beta_scale: float) -> float:
    """Return the discrete normalization ``sum_{r=1}^{r_max} kernel(r)``."""
    return kernel_sum(1, r_max + 1, q, beta_scale)


def q_exponential_pmf(r_max: int, q: float, beta_scale: float) -> np.ndarray:
    """Return the normalized probability mass on ``r = 1 .. r_max`` (exact sum)."""
    if r_max < 1:
        raise DomainError(f"support needs r_max >= 1, got {r_max}")
    _check_params(q, beta_scale)
    weights = np.exp(
        _log_kernel(np.arange(1, r_max + 1, dtype=np.float64), q, beta_scale)
    )
    return weights / weights.sum()


def sample_interoccurrence(
    q: float,
    beta_scale: float,
    size: int,
    rng: np.random.Generator,
    r_max: int = 100_000,
) -> np.ndarray:
    """Draw integer interoccurrence times from the discretized law on ``1 .. r_max``."""
    pmf = q_exponential_pmf(r_max, q, beta_scale)
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1
