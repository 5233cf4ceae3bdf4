"""Expected minimum of k draws from an empirical runtime sample.

Two estimators are provided.  :func:`expected_min_exact` evaluates the
order-statistic expectation of the minimum of ``k`` draws *with
replacement* from the sorted sample; :func:`expected_min_montecarlo`
literally resamples and averages the minima.  Timeouts contribute the cap
``T`` to the expectation and count as failures.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .runtime_data import DataError, EmpiricalDistribution

MAX_K = 10_000
DEFAULT_ITERATIONS = 100_000
_MC_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class MinOfKEstimate:
    k: int
    expected_time: float
    success_prob: float


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if k > MAX_K:
        raise ValueError(f"k must not exceed {MAX_K}")
    return int(k)


def survival_weights(n: int, k: int) -> np.ndarray:
    """P(min of k draws has sorted index >= i), i = 0..n-1."""
    return ((n - np.arange(n)) / n) ** k


def min_of_k_weights(n: int, k: int) -> np.ndarray:
    """P(min of k draws is the i-th order statistic), i = 0..n-1.

    ``w_i = ((n-i)/n)**k - ((n-i-1)/n)**k`` with 0-based ``i``; telescopes to 1.
    """
    surv = survival_weights(n, k)
    return surv - np.append(surv[1:], 0.0)


def expected_min_exact(d: EmpiricalDistribution, k: int) -> MinOfKEstimate:
    k = _check_k(k)
    t = d.sorted_times
    n = len(t)
    # Tail-sum form of sum_i t_(i) w_i: t_(1) + sum_i (t_(i) - t_(i-1)) P(min index >= i).
    # Every term is non-negative and non-increasing in k, so the result is
    # monotone in k and exact for constant samples.
    gaps = np.diff(t)
    expected = float(t[0] + np.dot(gaps, survival_weights(n, k)[1:])) if n > 1 else float(t[0])
    expected = min(expected, d.timeout_cap)
    success = 1.0 - (d.timeout_count / n) ** k
    return MinOfKEstimate(k, expected, success)


def expected_min_montecarlo(d: EmpiricalDistribution, k: int, iterations: int = DEFAULT_ITERATIONS,
                            rng_seed: Union[int, np.random.SeedSequence, None] = 0) -> MinOfKEstimate:
    """Average of ``iterations`` minima of ``k`` uniform draws with replacement."""
    k = _check_k(k)
    if int(iterations) != iterations or iterations < 1:
        raise ValueError("iterations must be a positive integer")
    rng = np.random.default_rng(rng_seed)
    t = d.sorted_times
    n = len(t)
    first_timeout = n - d.timeout_count
    total = 0.0
    failures = 0
    chunk = max(1, _MC_CHUNK_CELLS // k)
    done = 0
    while done < iterations:
        m = min(chunk, iterations - done)
        # the sample is sorted, so the minimum value sits at the minimum index
        idx = rng.integers(0, n, size=(m, k)).min(axis=1)
        total += float(t[idx].sum())
        failures += int(np.count_nonzero(idx >= first_timeout))
        done += m
    return MinOfKEstimate(k, total / iterations, 1.0 - failures / iterations)


def estimate(d: EmpiricalDistribution, k: int, method: str = "exact",
             iterations: int = DEFAULT_ITERATIONS, rng_seed=0) -> MinOfKEstimate:
    if method == "exact":
        return expected_min_exact(d, k)
    if method in ("montecarlo", "mc"):
        return expected_min_montecarlo(d, k, iterations, rng_seed)
    raise ValueError(f"unknown method {method!r}")


def stable_id_hash(instance: str) -> int:
    return int.from_bytes(hashlib.sha256(instance.encode("utf-8")).digest()[:8], "little")


def stream_seed(master_seed: int, instance: str, *extra: int) -> np.random.SeedSequence:
    """Per-instance RNG stream, independent of evaluation order.

    The stream is keyed on ``(master_seed, sha256(instance))`` plus any
    extra integers (e.g. the core count) via ``SeedSequence.spawn_key``.
    """
    return np.random.SeedSequence(int(master_seed), spawn_key=(stable_id_hash(instance), *map(int, extra)))


# --------------------------------------------------------------------------
# synthetic distributions

@dataclass(frozen=True)
class Constant:
    c: float


@dataclass(frozen=True)
class UniformDiscrete:
    lo: int
    hi: int


@dataclass(frozen=True)
class LogNormal:
    mu: float
    sigma: float


@dataclass(frozen=True)
class ParetoTail:
    xmin: float
    alpha: float


@dataclass(frozen=True)
class TwoPoint:
    t_fast: float
    p_fast: float
    t_slow: float


@dataclass(frozen=True)
class Bimodal:
    """Mixture of two log-normals sharing ``sigma``; ``mix`` is the weight of the first."""
    mu1: float
    mu2: float
    sigma: float
    mix: float


SyntheticKind = Union[Constant, UniformDiscrete, LogNormal, ParetoTail, TwoPoint, Bimodal]


@dataclass(frozen=True)
class SyntheticSpec:
    kind: SyntheticKind
    sample_size: int
    timeout_cap: float = 3600.0
    rng_seed: Union[int, np.random.SeedSequence] = 0


def _validate(kind):
    if isinstance(kind, Constant):
        ok = kind.c > 0
    elif isinstance(kind, UniformDiscrete):
        ok = 0 < kind.lo <= kind.hi
    elif isinstance(kind, LogNormal):
        ok = kind.sigma > 0
    elif isinstance(kind, ParetoTail):
        ok = kind.xmin > 0 and kind.alpha > 0
    elif isinstance(kind, TwoPoint):
        ok = 0 <= kind.p_fast <= 1 and kind.t_fast > 0 and kind.t_slow > 0
    elif isinstance(kind, Bimodal):
        ok = kind.sigma > 0 and 0 <= kind.mix <= 1
    else:
        raise DataError(f"unknown synthetic kind {kind!r}")
    if not ok:
        raise DataError(f"invalid parameters for {kind!r}")


def _draw(kind, n, rng):
    if isinstance(kind, Constant):
        return np.full(n, float(kind.c))
    if isinstance(kind, UniformDiscrete):
        return rng.integers(kind.lo, kind.hi + 1, size=n).astype(float)
    if isinstance(kind, LogNormal):
        return rng.lognormal(kind.mu, kind.sigma, size=n)
    if isinstance(kind, ParetoTail):
        # classical Pareto via inverse CDF; 1 - U keeps the base in (0, 1]
        return kind.xmin * (1.0 - rng.random(n)) ** (-1.0 / kind.alpha)
    if isinstance(kind, TwoPoint):
        fast = rng.random(n) < kind.p_fast
        return np.where(fast, float(kind.t_fast), float(kind.t_slow))
    if isinstance(kind, Bimodal):
        first = rng.random(n) < kind.mix
        mu = np.where(first, kind.mu1, kind.mu2)
        return np.exp(rng.normal(mu, kind.sigma))
    raise DataError(f"unknown synthetic kind {kind!r}")


def generate_synthetic(spec: SyntheticSpec, instance: Optional[str] = None) -> EmpiricalDistribution:
    """Draw ``spec.sample_size`` runtimes; draws at or above the cap become timeouts."""
    _validate(spec.kind)
    if spec.sample_size < 1:
        raise DataError("sample_size must be positive")
    if not spec.timeout_cap > 0:
        raise DataError("timeout_cap must be positive")
    rng = np.random.default_rng(spec.rng_seed)
    draws = _draw(spec.kind, spec.sample_size, rng)
    draws = np.maximum(draws, np.finfo(float).tiny)
    timeout = draws >= spec.timeout_cap
    return EmpiricalDistribution.from_times(draws[~timeout], spec.timeout_cap,
                                            timeouts=int(timeout.sum()), instance=instance)
