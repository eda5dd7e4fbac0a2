"""Expected download delay of the three layered coding schemes.

All delays are counted in slots (single channel-symbol transmissions) needed
until a chunk of ``k_p`` packets of ``k_s`` symbols each has been decoded by
every user.

IIR
    Coded symbols are sent until ``k_s`` of them arrive; no packet is lost.
FR
    Every packet takes exactly ``n_s`` slots and is erased if fewer than
    ``k_s`` symbols arrive; a rateless packet-level code covers the losses.
FIR
    Like FR, but a packet attempt stops as soon as ``k_s`` symbols have
    arrived.  Point-to-point only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .distributions import (
    ErasureProb,
    NegBinomialParams,
    max_orderstat_mean_exact,
    nb_cdf,
    nb_survival,
    packet_success_prob,
)

__all__ = [
    "MIN_SUCCESS_PROB",
    "BudgetOutcome",
    "CodeConfig",
    "DelayEstimate",
    "InfiniteDelayError",
    "Method",
    "Scenario",
    "Scheme",
    "decode_prob_within_budget",
    "expected_delay",
    "fir_delay_excess",
    "fir_expected_delay",
    "fir_expected_symbol_budget",
    "fr_expected_delay",
    "iir_expected_delay",
]

# below this the packet success probability is treated as zero
MIN_SUCCESS_PROB = 1e-300


class InfiniteDelayError(ArithmeticError):
    """The packet success probability is numerically zero."""


class Scheme(str, enum.Enum):
    IIR = "IIR"
    FR = "FR"
    FIR = "FIR"

    def __str__(self):
        return self.value


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    EXACT_SUM = "exact_sum"
    MONTE_CARLO = "monte_carlo"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CodeConfig:
    """Block parameters: ``k_s`` data symbols per packet, ``n_s`` coded
    symbols per packet (``None`` for IIR), ``k_p`` packets per chunk."""

    k_s: int
    k_p: int
    n_s: Optional[int] = None

    def __post_init__(self):
        if self.k_s < 1 or int(self.k_s) != self.k_s:
            raise ValueError(f"k_s must be a positive integer, got {self.k_s!r}")
        if self.k_p < 1 or int(self.k_p) != self.k_p:
            raise ValueError(f"k_p must be a positive integer, got {self.k_p!r}")
        if self.n_s is not None and (int(self.n_s) != self.n_s or self.n_s < self.k_s):
            raise ValueError(f"n_s must be an integer >= k_s, got {self.n_s!r}")

    @property
    def data_symbols(self) -> int:
        return self.k_p * self.k_s


@dataclass(frozen=True)
class Scenario:
    code: CodeConfig
    eps_s: float
    users: int = 1
    scheme: Scheme = Scheme.IIR

    def __post_init__(self):
        object.__setattr__(self, "eps_s", ErasureProb(self.eps_s))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.users < 1 or int(self.users) != self.users:
            raise ValueError(f"users must be a positive integer, got {self.users!r}")
        if self.scheme is not Scheme.IIR and self.code.n_s is None:
            raise ValueError(f"{self.scheme} requires n_s")
        if self.scheme is Scheme.FIR and self.users != 1:
            raise ValueError("FIR is defined for a single user only")

    @classmethod
    def build(cls, scheme, k_s, k_p, eps_s, users=1, n_s=None) -> "Scenario":
        return cls(CodeConfig(k_s=k_s, k_p=k_p, n_s=n_s), eps_s, users, Scheme(scheme))

    def with_ns(self, n_s: int) -> "Scenario":
        return replace(self, code=replace(self.code, n_s=n_s))


@dataclass(frozen=True)
class DelayEstimate:
    """Expected delay in slots, with how it was obtained.

    ``normalized`` is slots per data symbol, ``mean_slots / (k_p * k_s)``.
    """

    mean_slots: float
    method: Method
    std_err: Optional[float] = None
    normalized: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if (self.std_err is not None) != (self.method is Method.MONTE_CARLO):
            raise ValueError("std_err is required for, and only for, monte_carlo estimates")

    @classmethod
    def for_scenario(cls, scenario: Scenario, mean_slots, method, std_err=None):
        floor = scenario.code.data_symbols
        if mean_slots < floor * (1.0 - 1e-12):
            raise ValueError(
                f"delay {mean_slots!r} below the perfect-channel floor {floor}"
            )
        return cls(float(mean_slots), method, std_err, mean_slots / floor)


def _success_or_raise(n_s: int, k_s: int, eps_s: float) -> float:
    success = packet_success_prob(n_s, k_s, eps_s)
    if success < MIN_SUCCESS_PROB:
        raise InfiniteDelayError(
            f"packet success probability {success:.3g} is numerically zero "
            f"(n_s={n_s}, k_s={k_s}, eps_s={eps_s})"
        )
    return success


def _require(scenario: Scenario, scheme: Scheme) -> None:
    if scenario.scheme is not scheme:
        raise ValueError(f"expected a {scheme} scenario, got {scenario.scheme}")


def iir_expected_delay(scenario: Scenario) -> DelayEstimate:
    """``k_p`` times the expected per-packet time until all users decode.

    A packet is multicast only after every user holds the previous one, so
    each packet costs the maximum of ``u`` i.i.d. ``NB(k_s, 1 - eps_s)``.
    """
    _require(scenario, Scheme.IIR)
    code = scenario.code
    if scenario.users == 1:
        mean = code.k_p * code.k_s / (1.0 - scenario.eps_s)
        return DelayEstimate.for_scenario(scenario, mean, Method.ANALYTIC)
    per_packet = max_orderstat_mean_exact(
        NegBinomialParams.from_erasure(code.k_s, scenario.eps_s), scenario.users
    )
    return DelayEstimate.for_scenario(scenario, code.k_p * per_packet, Method.EXACT_SUM)


def fr_expected_delay(scenario: Scenario) -> DelayEstimate:
    """``n_s`` slots per packet times the expected number of packets until
    the slowest user holds ``k_p`` of them."""
    _require(scenario, Scheme.FR)
    code = scenario.code
    success = _success_or_raise(code.n_s, code.k_s, scenario.eps_s)
    if scenario.users == 1:
        mean = code.k_p * code.n_s / success
        return DelayEstimate.for_scenario(scenario, mean, Method.ANALYTIC)
    packets = max_orderstat_mean_exact(NegBinomialParams(code.k_p, success), scenario.users)
    return DelayEstimate.for_scenario(scenario, code.n_s * packets, Method.EXACT_SUM)


def fir_expected_symbol_budget(k_s: int, n_s: int, eps_s: float) -> float:
    """Expected slots spent on one FIR packet attempt, ``E[min(X, n_s)]``
    with ``X ~ NB(k_s, 1 - eps_s)``.

    Evaluated as ``k_s + sum_{t=k_s}^{n_s-1} P(X > t)``, which equals the
    truncated-mean sum ``sum_n n P(X = n) + n_s P(X > n_s)`` and is exactly
    ``k_s`` when ``n_s == k_s``.
    """
    if n_s < k_s:
        raise ValueError(f"n_s must be >= k_s, got n_s={n_s!r}, k_s={k_s!r}")
    eps_s = ErasureProb(eps_s)
    if n_s == k_s or eps_s == 0.0:
        return float(k_s)
    params = NegBinomialParams.from_erasure(k_s, eps_s)
    tail = nb_survival(params, np.arange(k_s, n_s, dtype=np.float64))
    return min(k_s + math.fsum(tail.tolist()), float(n_s))


def _fir_success(k_s: int, n_s: int, eps_s: float) -> float:
    # 1 - P(X > n_s) is monotone in n_s to the last bit, which the summed
    # binomial terms are not; near n_s == k_s the direct sum keeps precision
    if n_s > k_s:
        tail = float(nb_survival(NegBinomialParams.from_erasure(k_s, eps_s), n_s))
        if tail <= 0.5:
            return 1.0 - tail
    return _success_or_raise(n_s, k_s, eps_s)


def fir_expected_delay(scenario: Scenario) -> DelayEstimate:
    """Wald product: expected attempts ``k_p / (1 - eps_p)`` times the
    expected slots per attempt."""
    _require(scenario, Scheme.FIR)
    code = scenario.code
    success = _fir_success(code.k_s, code.n_s, scenario.eps_s)
    per_attempt = fir_expected_symbol_budget(code.k_s, code.n_s, scenario.eps_s)
    mean = code.k_p / success * per_attempt
    return DelayEstimate.for_scenario(scenario, mean, Method.ANALYTIC)


def fir_delay_excess(scenario: Scenario) -> float:
    """FIR delay minus the single-user IIR delay, free of cancellation.

    With ``S(t) = P(X > t)``, the excess is
    ``k_p (E[X] S(n_s) - sum_{t >= n_s} S(t)) / (1 - S(n_s))``, which stays
    resolvable long after the FIR delay itself has rounded to the IIR value.
    """
    _require(scenario, Scheme.FIR)
    code = scenario.code
    if scenario.eps_s == 0.0:
        return 0.0
    params = NegBinomialParams.from_erasure(code.k_s, scenario.eps_s)
    head = float(nb_survival(params, code.n_s))
    if head == 0.0:
        return 0.0
    pieces = []
    start, block = code.n_s, 1024
    while True:
        tail = nb_survival(params, np.arange(start, start + block, dtype=np.float64))
        pieces.extend(tail.tolist())
        if tail[-1] == 0.0 or tail[-1] < 1e-18 * math.fsum(pieces):
            break
        start += block
        block *= 2
    residual = math.fsum(pieces)
    success = 1.0 - head if head <= 0.5 else _success_or_raise(code.n_s, code.k_s, scenario.eps_s)
    return code.k_p * (params.mean() * head - residual) / success


_DISPATCH = {
    Scheme.IIR: iir_expected_delay,
    Scheme.FR: fr_expected_delay,
    Scheme.FIR: fir_expected_delay,
}


def expected_delay(scenario: Scenario) -> DelayEstimate:
    return _DISPATCH[scenario.scheme](scenario)


@dataclass(frozen=True)
class BudgetOutcome:
    probability: float
    expected_users: float


def decode_prob_within_budget(scenario: Scenario, budget_slots: int) -> BudgetOutcome:
    """Probability that one user decodes the chunk within ``budget_slots``.

    IIR decodes once ``k_p * k_s`` symbols have arrived.  FR decodes once
    ``k_p`` packets have arrived, and only whole packets (``n_s`` slots each)
    fit in the budget.  ``expected_users`` is ``users * probability``.
    """
    if budget_slots < 0 or int(budget_slots) != budget_slots:
        raise ValueError(f"budget must be a nonnegative integer, got {budget_slots!r}")
    code = scenario.code
    if scenario.scheme is Scheme.IIR:
        params = NegBinomialParams.from_erasure(code.data_symbols, scenario.eps_s)
        prob = nb_cdf(params, int(budget_slots))
    elif scenario.scheme is Scheme.FR:
        success = packet_success_prob(code.n_s, code.k_s, scenario.eps_s)
        if success <= 0.0:
            prob = 0.0
        else:
            prob = nb_cdf(NegBinomialParams(code.k_p, success), int(budget_slots) // code.n_s)
    else:
        raise ValueError("decode probability within a budget is defined for IIR and FR only")
    return BudgetOutcome(prob, scenario.users * prob)

