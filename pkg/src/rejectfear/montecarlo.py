"""Monte Carlo check of perceived utility and payoff.

Each draw is a uniform score ``s``.  The student is admitted to every
school ``x <= s`` and attends the best of them.  Every admission yields the
subjective gain ``(1 - p) tau v`` and every rejection the loss
``-lam p tau v``, with ``p = 1 - x`` and ``v = x``.  Sample means converge to
``perceived_utility`` and ``true_payoff`` without ever forming gamma.

Streams are independent Philox generators keyed by ``(seed, stream)``.
Each stream's draws depend only on its key and sample count, and streams
are merged in index order, so results are bit-identical however the
streams are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import BiasParams, Portfolio

THREADS_ENV = "REJECTFEAR_THREADS"
CHUNK = 1 << 20


@dataclass(frozen=True)
class SimConfig:
    samples: int = 1_000_000
    seed: int = 0
    stream_count: int = 8

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")
        if self.stream_count < 1:
            raise DomainError(f"stream_count must be >= 1, got {self.stream_count}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class SimResult:
    samples: int
    mean_perceived: float
    mean_payoff: float
    stderr_perceived: float
    stderr_payoff: float


@dataclass
class _Moments:
    """Running count, mean and sum of squared deviations for two series."""

    n: int = 0
    mean: np.ndarray = None
    m2: np.ndarray = None

    def __post_init__(self) -> None:
        if self.mean is None:
            self.mean = np.zeros(2)
            self.m2 = np.zeros(2)

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean.copy(), other.m2.copy()
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta * delta * (self.n * other.n / n)
        self.n = n

    @classmethod
    def of(cls, perceived: np.ndarray, payoff: np.ndarray) -> "_Moments":
        data = np.stack([perceived, payoff])
        mean = data.mean(axis=1)
        m2 = ((data - mean[:, None]) ** 2).sum(axis=1)
        return cls(n=data.shape[1], mean=mean, m2=m2)


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    key = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(key))


def acceptance_matrix(scores: np.ndarray, portfolio: Portfolio) -> np.ndarray:
    """``accepted[n, i]``: score ``n`` clears school ``i`` (ties admit)."""
    xs = np.asarray(portfolio.schools)
    return scores[:, None] >= xs[None, :]


def realize(scores: np.ndarray, portfolio: Portfolio, bias: BiasParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw perceived utility and consumption for an array of scores."""
    asc = np.asarray(portfolio.schools[::-1])
    gain = bias.tau * asc * asc
    loss = bias.lam * bias.tau * asc * (1.0 - asc)
    gain_cum = np.concatenate([[0.0], np.cumsum(gain)])
    loss_cum = np.concatenate([[0.0], np.cumsum(loss)])
    # number of schools admitted: all ascending schools <= score
    admitted = np.searchsorted(asc, scores, side="right")
    consumption = np.where(admitted > 0, asc[np.maximum(admitted - 1, 0)], 0.0)
    behavioral = gain_cum[admitted] - (loss_cum[-1] - loss_cum[admitted])
    return behavioral + consumption, consumption


def _run_stream(portfolio: Portfolio, bias: BiasParams, seed: int, stream: int, count: int) -> _Moments:
    rng = stream_generator(seed, stream)
    acc = _Moments()
    left = count
    while left > 0:
        n = min(CHUNK, left)
        perceived, payoff = realize(rng.random(n), portfolio, bias)
        acc.merge(_Moments.of(perceived, payoff))
        left -= n
    return acc


def _thread_count(streams: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, streams))


def _stream_sizes(samples: int, streams: int) -> list[int]:
    base, extra = divmod(samples, streams)
    return [base + (1 if s < extra else 0) for s in range(streams)]


def simulate(portfolio: Portfolio, bias: BiasParams, config: SimConfig) -> SimResult:
    """Sample-mean estimates of perceived utility and payoff with standard errors."""
    if not isinstance(bias, BiasParams):
        raise DomainError("simulate needs BiasParams with tau and lambda, not a bare gamma")
    sizes = _stream_sizes(config.samples, config.stream_count)
    jobs = [(s, n) for s, n in enumerate(sizes) if n > 0]
    with ThreadPoolExecutor(max_workers=_thread_count(len(jobs))) as pool:
        parts = list(pool.map(lambda job: _run_stream(portfolio, bias, config.seed, *job), jobs))

    total = _Moments()
    for part in parts:
        total.merge(part)
    n = total.n
    if n > 1:
        stderr = np.sqrt(total.m2 / (n - 1) / n)
    else:
        stderr = np.zeros(2)
    return SimResult(
        samples=n,
        mean_perceived=float(total.mean[0]),
        mean_payoff=float(total.mean[1]),
        stderr_perceived=float(stderr[0]),
        stderr_payoff=float(stderr[1]),
    )
