"""Negative binomial machinery and maximum order statistics.

Every delay formula in the package reduces to one of two questions about a
negative binomial variable ``NB(k, p)`` (the number of Bernoulli(p) trials
needed for ``k`` successes):

* what is its pmf / cdf at a given trial count, and
* what is the expected maximum of ``u`` independent copies of it.

The second question has no closed form.  :func:`max_orderstat_mean_exact`
evaluates it by the tail-sum identity ``E[M] = sum_t (1 - F(t)**u)`` and is
the reference the heuristic approximations are compared with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln, xlog1py, xlogy

__all__ = [
    "DEFAULT_REL_TOL",
    "MAX_TAIL_TERMS",
    "TAIL_RUN",
    "ConvergenceError",
    "ErasureProb",
    "NegBinomialParams",
    "approx_grabner",
    "approx_improved",
    "approx_lln",
    "max_orderstat_mean_exact",
    "nb_cdf",
    "nb_pmf",
    "nb_survival",
    "packet_erasure_prob",
    "packet_success_prob",
]

DEFAULT_REL_TOL = 1e-9
TAIL_RUN = 32
MAX_TAIL_TERMS = 10**8


class ConvergenceError(RuntimeError):
    """Raised when a truncated series does not settle within its term cap."""


class ErasureProb(float):
    """An erasure probability in ``[0, 1)``.

    Behaves exactly like a ``float``; construction enforces the range so an
    erasure probability of one (infinite expected delay) never enters a
    computation.
    """

    def __new__(cls, value):
        value = float(value)
        if not 0.0 <= value < 1.0:
            raise ValueError(f"erasure probability must lie in [0, 1), got {value!r}")
        return super().__new__(cls, value)

    @property
    def value(self) -> float:
        return float(self)


@dataclass(frozen=True)
class NegBinomialParams:
    """Parameters of ``NB(k, p)``: trials needed for ``k`` successes."""

    k: int
    p: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def from_erasure(cls, k: int, eps: float) -> "NegBinomialParams":
        return cls(k, 1.0 - ErasureProb(eps))

    def mean(self) -> float:
        return self.k / self.p


def _log_pmf(k: int, p: float, t: np.ndarray) -> np.ndarray:
    # log C(t-1, k-1) + k log p + (t-k) log(1-p), valid for t >= k
    return (
        gammaln(t) - gammaln(k) - gammaln(t - k + 1)
        + k * math.log(p)
        + xlog1py(t - k, -p)
    )


def nb_pmf(params: NegBinomialParams, t: int) -> float:
    """Probability that the ``k``-th success lands on trial ``t``."""
    if t < 0:
        raise ValueError(f"trial count must be nonnegative, got {t!r}")
    if t < params.k:
        return 0.0
    return float(np.exp(_log_pmf(params.k, params.p, np.float64(t))))


def nb_cdf(params: NegBinomialParams, t: int) -> float:
    """``P(X <= t)`` as a compensated sum of pmf terms ``k..t``."""
    if t < 0:
        raise ValueError(f"trial count must be nonnegative, got {t!r}")
    if t < params.k:
        return 0.0
    ts = np.arange(params.k, t + 1, dtype=np.float64)
    total = math.fsum(np.exp(_log_pmf(params.k, params.p, ts)).tolist())
    return min(total, 1.0)


def nb_survival(params: NegBinomialParams, t) -> np.ndarray:
    """Vectorised ``P(X > t)``.

    Uses ``P(X > t) = P(Binomial(t, p) < k)`` evaluated as a regularised
    incomplete beta function, which keeps full relative precision deep in
    the tail where ``1 - nb_cdf`` would cancel to zero.
    """
    t = np.asarray(t, dtype=np.float64)
    k = params.k
    out = np.ones_like(t)
    mask = t >= k
    if np.any(mask):
        out[mask] = betainc(t[mask] - k + 1.0, k, 1.0 - params.p)
    return out


def _binomial_log_terms(n: int, eps: float) -> np.ndarray:
    # log P(exactly j erasures among n symbols), j = 0..n
    j = np.arange(n + 1, dtype=np.float64)
    return (
        gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
        + xlogy(j, eps)
        + xlog1py(n - j, -eps)
    )


def _check_block(n_s: int, k_s: int) -> None:
    if k_s < 1:
        raise ValueError(f"k_s must be >= 1, got {k_s!r}")
    if n_s < k_s:
        raise ValueError(f"n_s must be >= k_s, got n_s={n_s!r}, k_s={k_s!r}")


def packet_erasure_prob(n_s: int, k_s: int, eps_s: float) -> float:
    """Probability that fewer than ``k_s`` of ``n_s`` coded symbols arrive.

    The packet is lost when the number of erased symbols ``j`` exceeds
    ``n_s - k_s``, so the sum runs over ``j = n_s - k_s + 1 .. n_s``.
    """
    _check_block(n_s, k_s)
    eps_s = ErasureProb(eps_s)
    terms = np.exp(_binomial_log_terms(n_s, eps_s))
    return min(math.fsum(terms[n_s - k_s + 1:].tolist()), 1.0)


def packet_success_prob(n_s: int, k_s: int, eps_s: float) -> float:
    """``1 - packet_erasure_prob``, summed directly so it stays accurate
    when the erasure probability is within rounding of one."""
    _check_block(n_s, k_s)
    eps_s = ErasureProb(eps_s)
    if n_s == k_s:
        # uncoded block: keeps FR equal to IIR at n_s = k_s = 1 to the last bit
        return (1.0 - eps_s) ** n_s
    terms = np.exp(_binomial_log_terms(n_s, eps_s))
    return min(math.fsum(terms[: n_s - k_s + 1].tolist()), 1.0)


def _first_long_run(below: np.ndarray, carry: int, run: int):
    """Index where a run of ``run`` consecutive ``True`` completes, else None.

    ``carry`` is the length of the run already in progress before the block.
    Returns ``(index_or_None, trailing_run_length)``.
    """
    n = below.size
    idx = np.arange(n)
    last_false = np.maximum.accumulate(np.where(below, -1, idx))
    lengths = np.where(last_false < 0, idx + 1 + carry, idx - last_false)
    hits = np.flatnonzero(lengths >= run)
    trailing = int(lengths[-1]) if n else carry
    return (int(hits[0]) if hits.size else None), trailing


def max_orderstat_mean_exact(
    params: NegBinomialParams,
    u: int,
    rel_tol: float = DEFAULT_REL_TOL,
    max_terms: int = MAX_TAIL_TERMS,
) -> float:
    """Expected maximum of ``u`` i.i.d. ``NB(k, p)`` variables.

    Sums ``P(M > t) = 1 - F(t)**u`` over ``t >= 0``.  The first ``k`` terms
    are exactly one.  Beyond that the series is cut once ``TAIL_RUN``
    consecutive terms have each fallen below ``rel_tol`` times the running
    sum; the terms are monotone decreasing so the guard cannot fire early.

    Parameters
    ----------
    params : NegBinomialParams
        The common distribution of the ``u`` variables.
    u : int
        Number of variables (multicast users), ``u >= 1``.
    rel_tol : float
        Relative truncation threshold.
    max_terms : int
        Hard cap on the number of tail terms; :class:`ConvergenceError` is
        raised if the truncation guard has not fired by then.

    Returns
    -------
    float
        ``E[max]``, never below the single-variable mean ``k / p``.
    """
    if int(u) != u or u < 1:
        raise ValueError(f"u must be a positive integer, got {u!r}")
    if not rel_tol > 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol!r}")
    k, p = params.k, params.p
    mean = params.mean()
    if u == 1:
        return mean
    if p == 1.0:
        return float(k)

    pieces = [float(k)]
    running = float(k)
    carry = 0
    start = k
    block = max(1024, int(2 * mean))
    used = 0
    while True:
        block = min(block, max_terms - used)
        if block <= 0:
            raise ConvergenceError(
                f"tail sum for NB({k}, {p}) with u={u} did not converge "
                f"within {max_terms} terms"
            )
        t = np.arange(start, start + block, dtype=np.float64)
        surv = nb_survival(params, t)
        with np.errstate(divide="ignore"):
            terms = -np.expm1(u * np.log1p(-surv))
        partial = running + np.cumsum(terms)
        hit, carry = _first_long_run(terms < rel_tol * partial, carry, TAIL_RUN)
        if hit is not None:
            pieces.extend(terms[: hit + 1].tolist())
            break
        pieces.extend(terms.tolist())
        running = float(partial[-1])
        used += block
        start += block
        block *= 2
    return max(math.fsum(pieces), mean)


def _log_base(x: float, eps: float) -> float:
    return math.log(x) / -math.log(eps)


def _check_approx_domain(k: int, eps: float, u: int) -> float:
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    if int(u) != u or u < 2:
        raise ValueError(f"u must be an integer >= 2, got {u!r}")
    lu = _log_base(u, eps)
    # log_{1/eps}(log_{1/eps} u) turns negative below one; the slack absorbs
    # rounding in cases such as log_10(10)
    if k > 1 and lu < 1.0 - 1e-12:
        raise ValueError(
            f"log_(1/eps)(u) = {lu:.6g} < 1: approximation undefined for k > 1"
        )
    return lu


def approx_grabner(k: int, eps: float, u: int) -> float:
    """Asymptotic expected maximum ``L + (k-1) log L`` with
    ``L = log_{1/eps} u`` (logarithms to base ``1/eps``)."""
    lu = _check_approx_domain(k, eps, u)
    if k == 1:
        return lu
    return lu + (k - 1) * _log_base(lu, eps)


def approx_improved(k: int, eps: float, u: int) -> float:
    """Small-``k`` refinement of :func:`approx_grabner`.

    Each additional required success costs ``log L + log((1-eps)/eps)``
    extra tosses (base ``1/eps``), the second term accounting for the
    expected number of players stuck one success short.
    """
    lu = _check_approx_domain(k, eps, u)
    if k == 1:
        return lu
    return lu + (k - 1) * (_log_base(lu, eps) + _log_base((1.0 - eps) / eps, eps))


def approx_lln(k: int, eps: float) -> float:
    """Law-of-large-numbers limit ``k / (1 - eps)``; independent of ``u``."""
    eps = ErasureProb(eps)
    return k / (1.0 - eps)
