"""Integer search over the physical-layer block length and the user count."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .distributions import packet_success_prob
from .schemes import (
    MIN_SUCCESS_PROB,
    DelayEstimate,
    InfiniteDelayError,
    Scenario,
    Scheme,
    expected_delay,
    fir_delay_excess,
)

__all__ = [
    "DEFAULT_USER_GRID",
    "CrossoverPoint",
    "OptimizationResult",
    "compare_multicast",
    "default_ns_max",
    "find_crossover_users",
    "optimize_ns",
]

DEFAULT_USER_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


def default_ns_max(scheme, k_s: int) -> int:
    return (5 if Scheme(scheme) is Scheme.FIR else 3) * k_s


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of :func:`optimize_ns`.

    ``profile`` holds ``(n_s, mean_slots)`` for every evaluated block length
    in increasing ``n_s``; ``math.inf`` marks block lengths whose packets
    essentially never get through.  ``skipped`` lists block lengths that
    were provably worse than the optimum and not evaluated (multicast FR).
    ``capped`` is set when the optimum sits on the search bound.
    """

    best_ns: int
    best_delay: DelayEstimate
    profile: list = field(default_factory=list)
    capped: bool = False
    skipped: tuple = ()


def _ns_lower_bound(k_s, k_p, n_s, eps_s):
    # the single-user FR delay bounds the multicast one from below
    success = packet_success_prob(n_s, k_s, eps_s)
    if success < MIN_SUCCESS_PROB:
        return math.inf
    return k_p * n_s / success


def optimize_ns(scheme, k_s: int, k_p: int, eps_s: float, u: int = 1,
                ns_max: Optional[int] = None) -> OptimizationResult:
    """Exhaustively search ``n_s`` in ``[k_s, ns_max]`` for the smallest
    expected delay; ties go to the smaller ``n_s``.

    FIR delays that coincide in floating point are separated by their exact
    excess over the IIR delay before falling back to the smaller ``n_s``.

    For multicast FR, block lengths whose single-user delay already exceeds
    the best multicast delay found are skipped: the maximum over users can
    only be larger, so they cannot win.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.IIR:
        raise ValueError("IIR has no block length to optimise")
    if ns_max is None:
        ns_max = default_ns_max(scheme, k_s)
    if ns_max < k_s:
        raise ValueError(f"ns_max must be >= k_s, got {ns_max!r}")
    base = Scenario.build(scheme, k_s=k_s, k_p=k_p, eps_s=eps_s, users=u, n_s=k_s)
    candidates = range(k_s, ns_max + 1)

    values = {}
    estimates = {}
    skipped = []
    if scheme is Scheme.FR and u > 1:
        bounds = sorted((_ns_lower_bound(k_s, k_p, n, eps_s), n) for n in candidates)
        best = math.inf
        for bound, n in bounds:
            if bound > best or bound == math.inf:
                skipped.append(n)
                continue
            est = expected_delay(base.with_ns(n))
            values[n], estimates[n] = est.mean_slots, est
            best = min(best, est.mean_slots)
    else:
        for n in candidates:
            try:
                est = expected_delay(base.with_ns(n))
            except InfiniteDelayError:
                values[n] = math.inf
                continue
            values[n], estimates[n] = est.mean_slots, est

    if not estimates:
        raise InfiniteDelayError(f"no finite delay for n_s in [{k_s}, {ns_max}]")
    if scheme is Scheme.FIR:
        # FIR keeps improving below float resolution of the delay itself
        def rank(n):
            return (values[n], fir_delay_excess(base.with_ns(n)), n)
    else:
        def rank(n):
            return (values[n], n)
    best_ns = min(estimates, key=rank)
    profile = sorted(values.items())
    return OptimizationResult(
        best_ns=best_ns,
        best_delay=estimates[best_ns],
        profile=profile,
        capped=best_ns == ns_max,
        skipped=tuple(sorted(skipped)),
    )


@dataclass(frozen=True)
class CrossoverPoint:
    users: int
    iir: DelayEstimate
    fr: DelayEstimate
    fr_ns: int

    @property
    def fr_wins(self) -> bool:
        return self.fr.mean_slots < self.iir.mean_slots


def compare_multicast(k_s: int, k_p: int, eps_s: float, users: Sequence[int],
                      ns_max: Optional[int] = None) -> list:
    """IIR against FR with per-``u`` optimised ``n_s``, one point per user count."""
    points = []
    for u in users:
        iir = expected_delay(Scenario.build(Scheme.IIR, k_s=k_s, k_p=k_p, eps_s=eps_s, users=u))
        opt = optimize_ns(Scheme.FR, k_s, k_p, eps_s, u=u, ns_max=ns_max)
        points.append(CrossoverPoint(u, iir, opt.best_delay, opt.best_ns))
    return points


def find_crossover_users(k_s: int, k_p: int, eps_s: float, u_max: int = 1000,
                         ns_max: Optional[int] = None,
                         grid: Sequence[int] = DEFAULT_USER_GRID) -> Optional[int]:
    """Smallest grid user count from which optimised FR stays strictly
    faster than IIR up to ``u_max``; ``None`` if FR never ends up ahead."""
    if u_max < 1:
        raise ValueError(f"u_max must be >= 1, got {u_max!r}")
    users = sorted(u for u in set(grid) if u <= u_max)
    if not users:
        return None
    points = compare_multicast(k_s, k_p, eps_s, users, ns_max)
    crossover = None
    for point in reversed(points):
        if not point.fr_wins:
            break
        crossover = point.users
    return crossover

