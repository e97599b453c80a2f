"""Synchronous bounded-confidence opinion dynamics with truth seekers.

Opinions live on the unit interval. At every step each agent replaces its
opinion with the average over its epsilon-neighborhood (all agents whose
opinion lies within ``epsilon`` of its own, itself included). Truth
seekers additionally pull toward the truth value with their attraction
strength, so a seeker's update is a convex mix of the neighborhood
average and the truth. The noisy variant perturbs every target by a
bounded term and clamps the result back into [0, 1].

All step functions are pure: they read one state snapshot and return a
new one, so agents within a step can be evaluated in any order (or in
parallel) without changing the result. Randomness never enters here;
noise vectors are explicit inputs supplied by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ModelConfig",
    "OpinionState",
    "clamp_unit",
    "clamp_vector",
    "neighbor_set",
    "neighbor_means",
    "local_mean",
    "step_noise_free",
    "step_noisy",
    "deviation",
    "validate_state",
]


@dataclass(frozen=True)
class ModelConfig:
    """Full parameterization of one model instance.

    ``alpha`` may be given as a single float (applied to every agent) or
    as one value per agent; it is stored as a tuple. Only the attraction
    of agents in ``seekers`` takes effect, everyone else's is treated as
    zero. ``seekers`` may be empty, which yields plain bounded-confidence
    averaging with no truth pull.
    """

    n: int
    epsilon: float
    truth: float
    alpha: tuple[float, ...]
    seekers: frozenset[int]
    delta: float

    def __init__(
        self,
        n: int,
        epsilon: float,
        truth: float,
        alpha: float | Sequence[float],
        seekers: Iterable[int],
        delta: float,
    ) -> None:
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"agent count n must be a positive integer, got {n!r}")
        if not 0.0 < epsilon <= 1.0:
            raise ValueError(f"confidence threshold epsilon must lie in (0, 1], got {epsilon!r}")
        if not 0.0 <= truth <= 1.0:
            raise ValueError(f"truth value must lie in [0, 1], got {truth!r}")
        if delta < 0.0:
            raise ValueError(f"noise strength delta must be >= 0, got {delta!r}")
        if isinstance(alpha, (int, float, np.floating, np.integer)):
            alpha_t = (float(alpha),) * int(n)
        else:
            alpha_t = tuple(float(a) for a in alpha)
        if len(alpha_t) != n:
            raise ValueError(f"alpha must have one entry per agent ({n}), got {len(alpha_t)}")
        if any(not 0.0 <= a <= 1.0 for a in alpha_t):
            raise ValueError("every attraction strength alpha must lie in [0, 1]")
        seekers_f = frozenset(int(i) for i in seekers)
        if any(i < 0 or i >= n for i in seekers_f):
            raise ValueError(f"seeker indices must lie in [0, {n}), got {sorted(seekers_f)}")
        if any(alpha_t[i] <= 0.0 for i in seekers_f):
            raise ValueError("every seeker must have attraction strength alpha > 0")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "truth", float(truth))
        object.__setattr__(self, "alpha", alpha_t)
        object.__setattr__(self, "seekers", seekers_f)
        object.__setattr__(self, "delta", float(delta))

    @property
    def m(self) -> int:
        """Number of truth seekers."""
        return len(self.seekers)

    @cached_property
    def seeker_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[sorted(self.seekers)] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def effective_alpha(self) -> np.ndarray:
        """Per-agent attraction actually applied: alpha[i] for seekers, else 0."""
        eff = np.zeros(self.n)
        for i in self.seekers:
            eff[i] = self.alpha[i]
        eff.flags.writeable = False
        return eff

    def homogeneous_alpha(self) -> float | None:
        """The common attraction strength, or None if entries differ."""
        first = self.alpha[0]
        if all(a == first for a in self.alpha):
            return first
        return None


@dataclass(frozen=True, eq=False)
class OpinionState:
    """Opinion profile at one time step: step index ``t`` and vector ``x``."""

    t: int
    x: np.ndarray

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"step index t must be >= 0, got {self.t!r}")
        arr = np.asarray(self.x, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"opinion vector must be 1-D, got shape {arr.shape}")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "x", arr)


def validate_state(state: OpinionState, config: ModelConfig) -> None:
    """Check that a state is a legal profile for the given config."""
    if state.x.shape != (config.n,):
        raise ValueError(f"state has {state.x.shape[0]} opinions, config expects {config.n}")
    if not np.all(np.isfinite(state.x)):
        raise ValueError("opinion vector contains non-finite values")
    if np.any(state.x < 0.0) or np.any(state.x > 1.0):
        raise ValueError("every opinion must lie in [0, 1]")


def clamp_unit(v: float) -> float:
    """Clamp a scalar into [0, 1]."""
    if v > 1.0:
        return 1.0
    if v < 0.0:
        return 0.0
    return float(v)


def clamp_vector(values: np.ndarray) -> np.ndarray:
    """Componentwise clamp into [0, 1]."""
    return np.clip(values, 0.0, 1.0)


def _check_agent(i: int, n: int) -> int:
    if not 0 <= int(i) < n:
        raise ValueError(f"agent index {i!r} out of range [0, {n})")
    return int(i)


def neighbor_set(state: OpinionState, i: int, epsilon: float) -> set[int]:
    """Agents within ``epsilon`` of agent ``i`` (closed comparison, includes i)."""
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    i = _check_agent(i, state.x.shape[0])
    close = np.abs(state.x - state.x[i]) <= epsilon
    return set(int(j) for j in np.nonzero(close)[0])


def neighbor_means(x: np.ndarray, epsilon: float) -> np.ndarray:
    """Neighborhood average for every agent of a raw opinion vector.

    The comparison is the exact closed test |x_j - x_i| <= epsilon. Each
    mean is clipped into the min/max hull of the contributing opinions so
    float summation can never push it outside, which keeps the noise-free
    update in [0, 1] without clamping.
    """
    diff = np.abs(x[:, None] - x[None, :])
    mask = diff <= epsilon
    counts = mask.sum(axis=1)
    means = (mask @ x) / counts
    lo = np.where(mask, x[None, :], np.inf).min(axis=1)
    hi = np.where(mask, x[None, :], -np.inf).max(axis=1)
    return np.clip(means, lo, hi)


def local_mean(state: OpinionState, i: int, epsilon: float) -> float:
    """Average opinion over agent i's neighborhood."""
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    i = _check_agent(i, state.x.shape[0])
    close = np.abs(state.x - state.x[i]) <= epsilon
    members = state.x[close]
    mean = members.sum() / members.size
    return float(min(max(mean, members.min()), members.max()))


def _targets(x: np.ndarray, config: ModelConfig) -> np.ndarray:
    means = neighbor_means(x, config.epsilon)
    eff = config.effective_alpha
    # means + a*(truth - means) cannot leave [min(means, truth), max(...)]
    # even under rounding, unlike the textbook a*truth + (1-a)*means form.
    combined = means + eff * (config.truth - means)
    # full attraction lands on the truth exactly, not within an ulp of it
    return np.where(eff == 1.0, config.truth, combined)


def step_noise_free(state: OpinionState, config: ModelConfig) -> OpinionState:
    """One synchronous step of the noise-free dynamics."""
    validate_state(state, config)
    return OpinionState(state.t + 1, _targets(state.x, config))


def step_noisy(state: OpinionState, config: ModelConfig, noise: np.ndarray) -> OpinionState:
    """One synchronous step with an explicit bounded perturbation.

    ``noise`` must satisfy |noise[i]| <= config.delta for every agent;
    the perturbed targets are clamped back into [0, 1].
    """
    validate_state(state, config)
    xi = np.asarray(noise, dtype=np.float64)
    if xi.shape != (config.n,):
        raise ValueError(f"noise vector must have shape ({config.n},), got {xi.shape}")
    if xi.size and np.max(np.abs(xi)) > config.delta:
        raise ValueError(
            f"noise exceeds the configured bound: max |xi| = {np.max(np.abs(xi))!r} "
            f"> delta = {config.delta!r}"
        )
    return OpinionState(state.t + 1, clamp_vector(_targets(state.x, config) + xi))


def deviation(state: OpinionState, subset: Iterable[int], truth: float) -> float:
    """Largest distance to the truth over a nonempty set of agents."""
    idx = sorted(_check_agent(i, state.x.shape[0]) for i in subset)
    if not idx:
        raise ValueError("deviation requires a nonempty agent subset")
    return float(np.max(np.abs(state.x[idx] - truth)))
