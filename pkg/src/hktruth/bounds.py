"""Closed-form precision/noise bounds and verification oracles.

For a group of ``n`` agents with ``m`` truth seekers of common attraction
strength ``alpha``, confidence threshold ``epsilon`` and noise strength
``delta``, the model admits closed-form precision guarantees:

* ``delta1``: how far seekers can sit from the truth once captured,
* ``delta2``: the same for non-seekers,
* ``delta_bar``: the overall precision, max of the two,
* ``delta_lower``: the largest noise strength for which capture is
  guaranteed almost surely.

This module also provides the constructive machinery used to verify the
convergence argument: a deterministic steered-noise protocol that drags
every agent toward the truth, the worst-case number of steered steps
needed from any start, the log-domain lower bound on the probability
that unsteered noise happens to realize such a block, and a running
average helper whose monotonicity the argument relies on.

Everything here is stateless; operations that require a homogeneous
attraction strength or at least one seeker refuse configs that lack them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import ModelConfig, OpinionState, neighbor_means

__all__ = [
    "NoiseBounds",
    "BlockEstimate",
    "compute_bounds",
    "bounds_for_config",
    "is_admissible",
    "in_absorbing_band",
    "steered_noise",
    "block_length",
    "success_log_prob_lower_bound",
    "block_estimate",
    "running_averages",
]


@dataclass(frozen=True)
class NoiseBounds:
    """Derived precision bounds for one (n, m, alpha, epsilon, delta)."""

    delta1: float
    delta2: float
    delta_bar: float
    delta_lower: float


@dataclass(frozen=True)
class BlockEstimate:
    """Steered-block length and log lower bound on its spontaneous probability."""

    L: int
    log_prob_lower: float


def compute_bounds(n: int, m: int, alpha: float, epsilon: float, delta: float) -> NoiseBounds:
    """Evaluate the four closed-form bounds.

    delta1 = n(1-alpha)delta/(m alpha) + delta
    delta2 = n delta/(m alpha) + delta
    delta_bar = max(delta1, delta2)
    delta_lower = min(m alpha epsilon / (2n + (2m-n)alpha), m epsilon / (n + 2m))
    """
    if n < 1:
        raise ValueError(f"agent count n must be >= 1, got {n!r}")
    if not 1 <= m <= n:
        raise ValueError(f"seeker count m must satisfy 1 <= m <= n, got m={m!r} with n={n!r}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"attraction strength alpha must lie in (0, 1], got {alpha!r}")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"confidence threshold epsilon must lie in (0, 1], got {epsilon!r}")
    if delta < 0.0:
        raise ValueError(f"noise strength delta must be >= 0, got {delta!r}")
    delta1 = n * (1.0 - alpha) * delta / (m * alpha) + delta
    delta2 = n * delta / (m * alpha) + delta
    delta_lower = min(
        m * alpha * epsilon / (2.0 * n + (2.0 * m - n) * alpha),
        m * epsilon / (n + 2.0 * m),
    )
    return NoiseBounds(delta1, delta2, max(delta1, delta2), delta_lower)


def bounds_for_config(config: ModelConfig) -> NoiseBounds:
    """Bounds for a full config; requires homogeneous alpha and >= 1 seeker."""
    alpha = config.homogeneous_alpha()
    if alpha is None:
        raise ValueError("bound formulas require a homogeneous alpha (all agents equal)")
    return compute_bounds(config.n, config.m, alpha, config.epsilon, config.delta)


def is_admissible(delta: float, bounds: NoiseBounds) -> bool:
    """True iff the noise strength falls in the guaranteed-capture range (0, delta_lower]."""
    return 0.0 < delta <= bounds.delta_lower


def in_absorbing_band(state: OpinionState, config: ModelConfig, bounds: NoiseBounds) -> bool:
    """True iff every seeker is within delta1 and every non-seeker within delta2 of the truth.

    Once a profile satisfies this and delta is admissible, no sequence of
    bounded noise vectors can break it (closed comparisons throughout).
    An empty non-seeker set is vacuously within delta2.
    """
    if config.m < 1:
        raise ValueError("the absorbing band is defined only for configs with >= 1 seeker")
    if config.homogeneous_alpha() is None:
        raise ValueError("the absorbing band requires a homogeneous alpha")
    dev = np.abs(state.x - config.truth)
    mask = config.seeker_mask
    if np.max(dev[mask]) > bounds.delta1:
        return False
    if config.m < config.n and np.max(dev[~mask]) > bounds.delta2:
        return False
    return True


def steered_noise(state: OpinionState, config: ModelConfig) -> np.ndarray:
    """Deterministic noise vector that drags every agent toward the truth.

    Each component is +delta/2 when the agent's neighborhood mean does not
    exceed the truth and -delta/2 otherwise: a fixed representative of the
    admissible bands [delta/2, delta] and [-delta, -delta/2]. One noisy
    step under this choice shrinks the worst deviation to at most
    max(d - delta/2, delta/2), so from any profile with deviation above
    delta each step gains at least delta/2.
    """
    if config.delta <= 0.0:
        raise ValueError("the steered protocol requires delta > 0")
    means = neighbor_means(state.x, config.epsilon)
    half = config.delta / 2.0
    return np.where(means <= config.truth, half, -half)


def block_length(delta: float) -> int:
    """Steered steps guaranteed to reach deviation <= delta from any start."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"block length is defined for delta in (0, 1), got {delta!r}")
    return int(math.ceil((1.0 - delta) / (delta / 2.0)))


def success_log_prob_lower_bound(n: int, L: int) -> float:
    """Natural log of the lower bound on one block of spontaneous steering.

    Each agent-step lands in the required quarter band with probability
    1/4, so a full block of n agents over L steps has probability at
    least 4**(-n*L); returned in log domain because that underflows
    double precision for realistic sizes.
    """
    if n < 1:
        raise ValueError(f"agent count n must be >= 1, got {n!r}")
    if L < 1:
        raise ValueError(f"block length L must be >= 1, got {L!r}")
    return -float(n) * float(L) * math.log(4.0)


def block_estimate(n: int, delta: float) -> BlockEstimate:
    """Convenience bundle of block_length and its log probability bound."""
    L = block_length(delta)
    return BlockEstimate(L, success_log_prob_lower_bound(n, L))


def running_averages(seq: Sequence[float] | np.ndarray, offset: int = 0) -> np.ndarray:
    """Running means of ``seq[offset:]``: k-th entry averages its first k values.

    A nondecreasing input yields a nondecreasing output (and dually), the
    property the steered-step argument leans on.
    """
    values = np.asarray(seq, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("running_averages needs a nonempty 1-D sequence")
    if not 0 <= offset < values.size:
        raise ValueError(f"offset must lie in [0, {values.size}), got {offset!r}")
    tail = values[offset:]
    return np.cumsum(tail) / np.arange(1, tail.size + 1)
