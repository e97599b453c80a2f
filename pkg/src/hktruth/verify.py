"""Property suites that check the model's guarantees empirically.

Each suite draws its own deterministic PCG64 stream, runs a configurable
number of trials, and reports a pass/fail/skip status together with the
worst margin it observed (how much slack was left before the property
would have been violated; negative means violated). Suites whose
hypothesis the supplied config does not meet are skipped with a note,
never failed.

The same primitives back the package's acceptance tests, which run them
at the trial counts and tolerances the project promises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from .bounds import (
    NoiseBounds,
    block_length,
    bounds_for_config,
    compute_bounds,
    in_absorbing_band,
    is_admissible,
    running_averages,
    steered_noise,
)
from .dynamics import ModelConfig, OpinionState
from .harness import draw_noise

__all__ = [
    "SuiteResult",
    "sample_bound_params",
    "sample_admissible_config",
    "absorption_margin",
    "steered_walk",
    "quarter_band_frequencies",
    "check_running_average_monotonicity",
    "check_quarter_bands",
    "check_range_preservation",
    "check_bound_consistency",
    "check_absorption",
    "check_steered_contraction",
    "run_all",
]

DECREASE_TOL = 1e-12
QUARTER_TOL = 0.005
# Band membership is checked on computed states; when a precision bound is
# hit exactly (alpha = 1 makes delta1 = delta) the stored opinion fl(A + xi)
# can sit one ulp outside the real-arithmetic band. Anything beyond this
# envelope is a genuine model violation (those scale with delta, not eps).
ROUNDING_SLACK = 1e-14


@dataclass(frozen=True)
class SuiteResult:
    name: str
    status: str  # "pass" | "fail" | "skip"
    trials: int
    margin: float | None
    note: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def _rng(seed: int, lane: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed + lane))


def sample_bound_params(rng: np.random.Generator, n_max: int = 50) -> tuple[int, int, float, float]:
    """Random (n, m, alpha, epsilon) valid for the bound formulas."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, n + 1))
    alpha = float(1.0 - rng.random())  # (0, 1]
    epsilon = float(1.0 - rng.random())  # (0, 1]
    return n, m, alpha, epsilon


def sample_admissible_config(
    rng: np.random.Generator,
    n_max: int = 30,
    delta_frac: tuple[float, float] = (0.3, 0.99),
    min_delta: float = 0.0,
    max_tries: int = 200,
) -> ModelConfig:
    """Random homogeneous-alpha config whose delta is strictly admissible.

    ``delta_frac`` scales delta into (0, delta_lower); ``min_delta``
    rejects configs whose admissible range is too small to iterate in
    reasonable time (the steered walk needs about 2/delta steps).
    """
    for _ in range(max_tries):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, n + 1))
        alpha = float(rng.uniform(0.05, 1.0))
        epsilon = float(rng.uniform(0.1, 1.0))
        truth = float(rng.random())
        nb = compute_bounds(n, m, alpha, epsilon, delta=0.0)
        delta = float(nb.delta_lower * rng.uniform(*delta_frac))
        if delta <= min_delta:
            continue
        seekers = [int(i) for i in rng.permutation(n)[:m]]
        return ModelConfig(n, epsilon, truth, alpha, seekers, delta)
    raise RuntimeError("could not sample an admissible config; widen the parameter ranges")


def _in_band_state(
    config: ModelConfig, bounds: NoiseBounds, rng: np.random.Generator, radius: float
) -> OpinionState:
    """Random profile inside the absorbing band, at most ``radius`` of each bound."""
    per_agent = np.where(config.seeker_mask, bounds.delta1, bounds.delta2)
    u = rng.uniform(-radius, radius, config.n)
    x = np.clip(config.truth + per_agent * u, 0.0, 1.0)
    return OpinionState(0, x)


def absorption_margin(
    config: ModelConfig,
    bounds: NoiseBounds,
    steps: int,
    rng: np.random.Generator,
    radius: float = 0.999,
) -> float:
    """Worst in-band slack over ``steps`` adversarially noised steps.

    Noise components mix the exact extremes +delta and -delta with
    uniform draws. Returns min over steps of the distance left inside
    the band; negative means the band was violated.
    """
    state = _in_band_state(config, bounds, rng, radius)
    if not in_absorbing_band(state, config, bounds):
        raise AssertionError("sampled start state must satisfy the band condition")
    mask = config.seeker_mask
    has_others = config.m < config.n
    delta = config.delta
    kinds = rng.integers(0, 3, size=(steps, config.n))
    uniforms = rng.random((steps, config.n))
    worst = math.inf
    for t in range(steps):
        xi = np.where(
            kinds[t] == 0,
            delta,
            np.where(kinds[t] == 1, -delta, delta * (2.0 * uniforms[t] - 1.0)),
        )
        state = dyn.step_noisy(state, config, xi)
        dev = np.abs(state.x - config.truth)
        worst = min(worst, bounds.delta1 - float(dev[mask].max()))
        if has_others:
            worst = min(worst, bounds.delta2 - float(dev[~mask].max()))
    return worst


def steered_walk(
    config: ModelConfig, x0: np.ndarray
) -> tuple[float, bool, int]:
    """Iterate steered steps from x0 until the worst deviation is <= delta.

    Returns (worst per-step decrease minus delta/2, entered within the
    block length, steps taken). The first value below -1e-12 or a False
    second value refutes the contraction guarantee.
    """
    delta = config.delta
    L = block_length(delta)
    state = OpinionState(0, np.asarray(x0, dtype=np.float64))
    d = float(np.max(np.abs(state.x - config.truth)))
    worst = math.inf
    for t in range(L):
        if d <= delta:
            return worst, True, t
        state = dyn.step_noisy(state, config, steered_noise(state, config))
        d_next = float(np.max(np.abs(state.x - config.truth)))
        worst = min(worst, (d - d_next) - delta / 2.0)
        d = d_next
    return worst, d <= delta, L


def quarter_band_frequencies(draws: int, delta: float, seed: int) -> tuple[float, float]:
    """Empirical frequency of the upper and lower quarter bands of the noise."""
    rng = _rng(seed, 0)
    xi = draw_noise(rng, draws, delta)
    upper = float(np.mean((xi >= delta / 2.0) & (xi <= delta)))
    lower = float(np.mean((xi <= -delta / 2.0) & (xi >= -delta)))
    return upper, lower


def check_running_average_monotonicity(trials: int = 1000, seed: int = 0) -> SuiteResult:
    """Monotone inputs must give monotone running averages (1e-12 slack)."""
    rng = _rng(seed, 1)
    worst = math.inf
    for _ in range(trials):
        length = int(rng.integers(1, 101))
        seq = np.sort(rng.random(length))
        direction = 1.0 if rng.random() < 0.5 else -1.0
        seq = seq if direction > 0 else seq[::-1]
        offset = int(rng.integers(0, length))
        out = running_averages(seq, offset)
        if out.size > 1:
            worst = min(worst, float(np.min(direction * np.diff(out))) + DECREASE_TOL)
    status = "pass" if worst >= 0.0 else "fail"
    return SuiteResult("running-average-monotonicity", status, trials, worst)


def check_quarter_bands(
    draws: int = 100_000, delta: float = 0.02, seed: int = 0
) -> SuiteResult:
    """Each quarter band [delta/2, delta] and [-delta, -delta/2] hits 1/4 +- 0.005.

    The 0.005 tolerance is stated for 10^5 draws; other draw counts scale
    it by sqrt(10^5 / draws) to keep the same confidence level.
    """
    if delta <= 0.0:
        return SuiteResult(
            "noise-quarter-bands", "skip", 0, None, "delta = 0 has no quarter bands"
        )
    tol = QUARTER_TOL * math.sqrt(100_000 / draws)
    upper, lower = quarter_band_frequencies(draws, delta, seed)
    margin = tol - max(abs(upper - 0.25), abs(lower - 0.25))
    status = "pass" if margin >= 0.0 else "fail"
    return SuiteResult("noise-quarter-bands", status, draws, margin)


def check_range_preservation(
    config: ModelConfig, trials: int = 500, seed: int = 0
) -> SuiteResult:
    """Both step kinds must keep every opinion inside [0, 1] exactly."""
    rng = _rng(seed, 2)
    worst = math.inf
    for _ in range(trials):
        state = OpinionState(0, rng.random(config.n))
        noisy = dyn.step_noisy(state, config, draw_noise(rng, config.n, config.delta))
        free = dyn.step_noise_free(state, config)
        for out in (noisy.x, free.x):
            worst = min(worst, float(np.min(out)), float(np.min(1.0 - out)))
    status = "pass" if worst >= 0.0 else "fail"
    return SuiteResult("range-preservation", status, trials, worst)


def check_bound_consistency(trials: int = 10_000, seed: int = 0) -> SuiteResult:
    """At delta = delta_lower the two precision bounds must fit inside epsilon."""
    rng = _rng(seed, 3)
    worst = math.inf
    for _ in range(trials):
        n, m, alpha, epsilon = sample_bound_params(rng)
        nb0 = compute_bounds(n, m, alpha, epsilon, delta=0.0)
        nb = compute_bounds(n, m, alpha, epsilon, delta=nb0.delta_lower)
        worst = min(worst, epsilon + 1e-12 - (nb.delta1 + nb.delta2))
    status = "pass" if worst >= 0.0 else "fail"
    return SuiteResult("bound-consistency", status, trials, worst)


def check_absorption(
    config: ModelConfig, trials: int = 100, steps: int = 200, seed: int = 0
) -> SuiteResult:
    """Once inside the absorbing band, bounded noise must never eject the group."""
    name = "absorbing-band-persistence"
    try:
        nb = bounds_for_config(config)
    except ValueError as exc:
        return SuiteResult(name, "skip", 0, None, str(exc))
    if not is_admissible(config.delta, nb):
        return SuiteResult(
            name,
            "skip",
            0,
            None,
            f"delta={config.delta!r} outside the admissible range "
            f"(0, {nb.delta_lower!r}]; hypothesis unmet",
        )
    rng = _rng(seed, 4)
    worst = math.inf
    for _ in range(trials):
        worst = min(worst, absorption_margin(config, nb, steps, rng))
    status = "pass" if worst >= -ROUNDING_SLACK else "fail"
    return SuiteResult(name, status, trials, worst)


def check_steered_contraction(
    config: ModelConfig, trials: int = 100, seed: int = 0
) -> SuiteResult:
    """Steered steps must gain delta/2 per step and finish within the block length."""
    name = "steered-contraction"
    if not 0.0 < config.delta < 1.0:
        return SuiteResult(
            name, "skip", 0, None, f"delta={config.delta!r} outside (0, 1); hypothesis unmet"
        )
    rng = _rng(seed, 5)
    worst = math.inf
    failures = 0
    for _ in range(trials):
        x0 = rng.random(config.n)
        if float(np.max(np.abs(x0 - config.truth))) <= config.delta:
            continue  # already at the target; nothing to contract
        margin, entered, _ = steered_walk(config, x0)
        worst = min(worst, margin + DECREASE_TOL)
        if not entered:
            failures += 1
    status = "pass" if worst >= 0.0 and failures == 0 else "fail"
    note = f"{failures} walks missed the block-length budget" if failures else ""
    return SuiteResult(name, status, trials, worst, note)


def run_all(
    config: ModelConfig,
    trials: int = 200,
    steps: int = 200,
    draws: int = 100_000,
    seed: int = 0,
) -> list[SuiteResult]:
    """Run every suite against one config; used by the `verify` command."""
    return [
        check_running_average_monotonicity(trials=max(trials, 100), seed=seed),
        check_quarter_bands(draws=draws, delta=config.delta, seed=seed),
        check_range_preservation(config, trials=trials, seed=seed),
        check_bound_consistency(trials=max(trials, 1000), seed=seed),
        check_absorption(config, trials=max(trials // 4, 10), steps=steps, seed=seed),
        check_steered_contraction(config, trials=max(trials // 4, 10), seed=seed),
    ]
