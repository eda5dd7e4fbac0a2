"""Coin-toss simulation of the IIR, FR and FIR generative processes.

Trials are grouped in fixed-size blocks.  Each block owns an independent
Philox stream keyed by ``(seed, block index, stream id)``, and every trial
reads only its own row of each draw, so a trial's value is a function of
``(seed, trial index)`` and the scenario alone.  The block size depends on
the scenario parameters, never on the number of trials, and blocks can be
run in any order or in parallel without changing the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import ErasureProb, packet_success_prob
from .schemes import (
    MIN_SUCCESS_PROB,
    DelayEstimate,
    InfiniteDelayError,
    Method,
    Scenario,
    Scheme,
)

__all__ = [
    "SimResult",
    "SimulationPlan",
    "block_generator",
    "sample_negative_binomial",
    "simulate",
    "simulate_max_orderstat",
]

MAX_BLOCK_ROWS = 1024
# uniforms drawn per block, bounds memory at ~32 MiB of float64
BLOCK_BUDGET = 1 << 22

_STREAM_IIR = 1
_STREAM_FR = 2
_STREAM_FIR = 3
_STREAM_ORDERSTAT = 4


def block_generator(seed: int, block: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block, stream))
    return np.random.Generator(np.random.Philox(ss))


def _rows_for(width: int) -> int:
    return int(max(1, min(MAX_BLOCK_ROWS, BLOCK_BUDGET // max(width, 1))))


def _nb_draws(rng: np.random.Generator, shape, k: int, p: float) -> np.ndarray:
    """NB(k, p) trial counts as sums of ``k`` inverse-CDF geometric draws."""
    shape = tuple(np.atleast_1d(shape)) if shape != () else ()
    if p >= 1.0:
        return np.full(shape, k, dtype=np.int64)
    u = 1.0 - rng.random(shape + (k,))  # (0, 1]
    extra = np.floor(np.log(u) / math.log1p(-p)).astype(np.int64)
    return extra.sum(axis=-1) + k


def sample_negative_binomial(k: int, p: float, rng: np.random.Generator, size=None):
    """Draw from ``NB(k, p)``, the number of trials until ``k`` successes.

    Each success waits a geometric time ``1 + floor(ln U / ln(1 - p))``;
    ``p == 1`` returns ``k`` without consuming randomness.  Returns an ``int``
    when ``size`` is None, otherwise an int64 array.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if size is None:
        return int(_nb_draws(rng, (), k, p))
    return _nb_draws(rng, size, k, p)


@dataclass(frozen=True)
class SimulationPlan:
    scenario: Scenario
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1 or int(self.trials) != self.trials:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= self.seed < 2**64 or int(self.seed) != self.seed:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimResult:
    mean_slots: float
    std_err: float
    min_slots: int
    max_slots: int
    trials: int
    samples: np.ndarray = field(repr=False, compare=False, default=None)

    def to_estimate(self, scenario: Scenario) -> DelayEstimate:
        return DelayEstimate.for_scenario(
            scenario, self.mean_slots, Method.MONTE_CARLO, self.std_err
        )

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        """Whether ``value`` lies within ``n_sigma`` standard errors.

        A zero standard error demands exact equality.
        """
        if self.std_err == 0.0:
            return self.mean_slots == value
        return abs(self.mean_slots - value) <= n_sigma * self.std_err


def _summarize(samples: np.ndarray) -> SimResult:
    n = samples.size
    total = int(samples.sum(dtype=np.int64))
    mean = total / n
    if n > 1:
        var = math.fsum(((samples - mean) ** 2).tolist()) / (n - 1)
    else:
        var = 0.0
    return SimResult(
        mean_slots=mean,
        std_err=math.sqrt(var / n),
        min_slots=int(samples.min()),
        max_slots=int(samples.max()),
        trials=n,
        samples=samples,
    )


def _run_blocks(trials: int, rows: int, seed: int, stream: int, kernel) -> np.ndarray:
    n_blocks = -(-trials // rows)
    out = np.empty(n_blocks * rows, dtype=np.int64)
    for b in range(n_blocks):
        # always a full block so a trial never depends on the trial count
        out[b * rows:(b + 1) * rows] = kernel(block_generator(seed, b, stream), rows)
    return out[:trials]


def _iir_kernel(k_s, k_p, p, users):
    def kernel(rng, rows):
        total = np.zeros(rows, dtype=np.int64)
        for _ in range(k_p):
            total += _nb_draws(rng, (rows, users), k_s, p).max(axis=1)
        return total
    return kernel


def _fr_kernel(k_p, n_s, p_packet, users):
    def kernel(rng, rows):
        packets = _nb_draws(rng, (rows, users), k_p, p_packet).max(axis=1)
        return packets * n_s
    return kernel


def _fir_kernel(k_s, k_p, n_s, p):
    def kernel(rng, rows):
        slots = np.zeros(rows, dtype=np.int64)
        decoded = np.zeros(rows, dtype=np.int64)
        active = np.ones(rows, dtype=bool)
        while active.any():
            need = _nb_draws(rng, rows, k_s, p)
            slots += np.where(active, np.minimum(need, n_s), 0)
            decoded += active & (need <= n_s)
            active &= decoded < k_p
        return slots
    return kernel


def simulate(plan: SimulationPlan) -> SimResult:
    """Monte Carlo estimate of the slots needed to deliver one chunk.

    IIR sums, over ``k_p`` packets, the slowest user's ``NB(k_s, 1-eps_s)``
    draw.  FR takes the slowest user's ``NB(k_p, 1-eps_p)`` packet count
    times ``n_s``.  FIR replays packet attempts one by one, each costing
    ``min(X, n_s)`` slots and succeeding iff ``X <= n_s``, until ``k_p``
    attempts have succeeded.
    """
    sc = plan.scenario
    code = sc.code
    p = 1.0 - sc.eps_s
    if sc.scheme is Scheme.IIR:
        width = sc.users * code.k_s
        kernel, stream = _iir_kernel(code.k_s, code.k_p, p, sc.users), _STREAM_IIR
    elif sc.scheme is Scheme.FR:
        success = packet_success_prob(code.n_s, code.k_s, sc.eps_s)
        if success < MIN_SUCCESS_PROB:
            raise InfiniteDelayError(f"packet success probability {success:.3g} is zero")
        width = sc.users * code.k_p
        kernel, stream = _fr_kernel(code.k_p, code.n_s, success, sc.users), _STREAM_FR
    else:
        if packet_success_prob(code.n_s, code.k_s, sc.eps_s) < MIN_SUCCESS_PROB:
            raise InfiniteDelayError("FIR attempts essentially never succeed")
        width = code.k_s
        kernel, stream = _fir_kernel(code.k_s, code.k_p, code.n_s, p), _STREAM_FIR
    samples = _run_blocks(plan.trials, _rows_for(width), plan.seed, stream, kernel)
    return _summarize(samples)


def simulate_max_orderstat(k: int, p: float, u: int, trials: int, seed: int = 0) -> SimResult:
    """Sample the maximum of ``u`` i.i.d. ``NB(k, p)`` draws ``trials`` times."""
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    ErasureProb(1.0 - p)

    def kernel(rng, rows):
        return _nb_draws(rng, (rows, u), k, p).max(axis=1)

    samples = _run_blocks(trials, _rows_for(u * k), seed, _STREAM_ORDERSTAT, kernel)
    return _summarize(samples)
