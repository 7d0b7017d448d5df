"""Exact normalisation constants and cycle-count distributions.

Everything here is exact up to floating point: the h_n and the joint
coefficients h_{n,k} are produced by convolution recurrences in log-space,
and a partition-enumeration oracle in extended precision is available for
n <= 9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import logsumexp

from . import kernels
from .weights import WeightModel, log_theta, tilt

BRUTE_FORCE_MAX_N = 9


class ConsistencyError(RuntimeError):
    """Two exact routes to the same quantity disagree."""


@dataclass(frozen=True)
class ExactTable:
    """log h_n for n = 0..N, where sum h_n t^n = exp(g(t) - g(0))."""

    model: WeightModel
    N: int
    log_h: np.ndarray

    def h(self, n: int) -> float:
        return math.exp(self.log_h[n])

    def check_recurrence(self) -> float:
        """Largest relative residual of n h_n = sum_j theta_j h_{n-j}."""
        lt = log_theta(self.model, self.N)
        worst = 0.0
        for n in range(1, self.N + 1):
            rhs = logsumexp(lt[1 : n + 1] + self.log_h[n - 1 :: -1])
            lhs = math.log(n) + self.log_h[n]
            if lhs == rhs == -math.inf:
                continue
            worst = max(worst, abs(math.expm1(lhs - rhs)))
        return worst


@dataclass(frozen=True)
class CycleCountDistribution:
    """Law of the number of cycles K at size n.

    ``log_mass[k] = log h_{n,k}`` with h_{n,k} = [q^k t^n] exp(q g(t)), so the
    probabilities are ``exp(log_mass - log_h)``. When built with ``k_max < n``
    only the masses up to ``k_max`` are present (each one exact).
    """

    n: int
    log_mass: np.ndarray
    log_h: float

    @property
    def k_max(self) -> int:
        return self.log_mass.size - 1

    @property
    def complete(self) -> bool:
        return self.k_max >= self.n

    @property
    def prob(self) -> np.ndarray:
        return np.exp(self.log_mass - self.log_h)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.k_max + 1)

    def missing_mass(self) -> float:
        """1 - sum of the stored probabilities (0 up to rounding when complete)."""
        return -math.expm1(logsumexp(self.log_mass) - self.log_h)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.prob)


def compute_h(model: WeightModel, N: int) -> ExactTable:
    """Table of log h_0..log h_N by the O(N^2) log-space recurrence."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    lt = log_theta(model, N)
    log_h = kernels.log_power_recurrence(np.ascontiguousarray(lt), 0.0, int(N))
    log_h.setflags(write=False)
    return ExactTable(model, int(N), log_h)


def tilted_coefficient(model: WeightModel, n: int, s: float, table: ExactTable | None = None) -> float:
    """log G_{n,s}, the n-th coefficient of exp(exp(-s) g(t)) (constant term of g dropped)."""
    if table is None or table.N < n or table.model != tilt(model, s):
        table = compute_h(tilt(model, s), n)
    return float(table.log_h[n])


def cycle_count_distribution(model: WeightModel, n: int, k_max: int | None = None,
                             table: ExactTable | None = None) -> CycleCountDistribution:
    """Exact pmf of the cycle count at size n.

    Cost is about ``k_max * n^2 / 2`` log-additions with O(n) memory; pass
    ``k_max`` to stop after the rows that matter (the masses returned are
    still exact).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    k_max = n if k_max is None else min(int(k_max), n)
    lt = np.ascontiguousarray(log_theta(model, max(n, 1)))
    log_mass = kernels.log_cycle_rows(lt, int(n), int(k_max))
    if table is None or table.N < n:
        table = compute_h(model, n)
    log_h = float(table.log_h[n])
    if k_max == n and n > 0:
        # same quantity via the row sums; tighter than the separate recurrence
        log_h_rows = float(logsumexp(log_mass))
        if abs(log_h_rows - log_h) > 1e-8 * max(1.0, abs(log_h)):
            raise ConsistencyError(f"row sum {log_h_rows} != log h_n {log_h} at n={n}")
        log_h = log_h_rows
    log_mass.setflags(write=False)
    return CycleCountDistribution(int(n), log_mass, log_h)


def exact_moments(dist: CycleCountDistribution) -> tuple[float, float]:
    """Mean and variance with compensated summation around a shift."""
    if not dist.complete:
        raise ValueError("moments need the complete distribution")
    p = dist.prob
    k = dist.support.astype(np.float64)
    c = float(k[np.argmax(p)])
    mean = c + math.fsum(p * (k - c))
    var = math.fsum(p * (k - mean) ** 2)
    return mean, var


def moment_sequence(model: WeightModel, N: int, table: ExactTable | None = None):
    """Exact mean and variance of K_n for all n <= N in O(N^2).

    Uses the first-cycle decomposition K_n = 1 + K_{n-J} with
    P(J = j) = theta_j h_{n-j} / (n h_n) and the law of total variance, so
    no subtraction of large numbers occurs.
    """
    if table is None or table.N < N:
        table = compute_h(model, N)
    lt = np.ascontiguousarray(log_theta(model, N))
    lh = np.ascontiguousarray(table.log_h[: N + 1])
    return kernels.first_cycle_moments(lt, lh, int(N))


def mgf_exact(model: WeightModel, n: int, s: float, dist: CycleCountDistribution | None = None,
              rtol: float = 1e-9) -> float:
    """E exp(-s K_n) from the pmf, cross-checked against G_{n,s} / h_n."""
    if dist is None:
        dist = cycle_count_distribution(model, n)
    if not dist.complete:
        raise ValueError("mgf needs the complete distribution")
    if dist.log_h == -math.inf:
        raise ValueError(f"h_{n} = 0: the cycle count at n={n} has no law")
    k = dist.support
    log_from_pmf = float(logsumexp(dist.log_mass - s * k) - dist.log_h)
    log_from_tables = tilted_coefficient(model, n, s) - dist.log_h
    if abs(math.expm1(log_from_pmf - log_from_tables)) > rtol:
        raise ConsistencyError(
            f"E exp(-sK) mismatch at n={n}, s={s}: {log_from_pmf} vs {log_from_tables}")
    return math.exp(log_from_pmf)


# ---------------------------------------------------------------------------
# partition-enumeration oracle
# ---------------------------------------------------------------------------


def partitions(n: int):
    """Integer partitions of n as multiplicity dicts {part: count}."""
    if n == 0:
        yield {}
        return

    def rec(remaining, largest):
        if remaining == 0:
            yield []
            return
        for p in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - p, p):
                yield [p] + rest

    for parts in rec(n, n):
        counts: dict[int, int] = {}
        for p in parts:
            counts[p] = counts.get(p, 0) + 1
        yield counts


def class_size(counts: dict[int, int]) -> int:
    """Number of permutations with the given cycle type."""
    n = sum(j * c for j, c in counts.items())
    denom = 1
    for j, c in counts.items():
        denom *= j**c * math.factorial(c)
    return math.factorial(n) // denom


def cycle_type_weights(model: WeightModel, n: int, dps: int = 40) -> dict[tuple, mpmath.mpf]:
    """Total unnormalised weight (divided by n!) of each cycle type of S_n."""
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    th = np.exp(log_theta(model, max(n, 1)))
    out = {}
    with mpmath.workdps(dps):
        for counts in partitions(n):
            w = mpmath.mpf(class_size(counts)) / mpmath.factorial(n)
            for j, c in counts.items():
                w *= mpmath.mpf(float(th[j])) ** c
            out[tuple(sorted(counts.items()))] = w
    return out


def cycle_type_probabilities(model: WeightModel, n: int) -> dict[tuple, float]:
    weights = cycle_type_weights(model, n)
    with mpmath.workdps(40):
        total = mpmath.fsum(weights.values())
        return {key: float(w / total) for key, w in weights.items()}


def brute_force(model: WeightModel, n: int) -> tuple[float, CycleCountDistribution]:
    """(h_n, pmf of K) by summing over cycle types of S_n in 40-digit arithmetic."""
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    weights = cycle_type_weights(model, n)
    with mpmath.workdps(40):
        by_k = [mpmath.mpf(0)] * (n + 1)
        for key, w in weights.items():
            by_k[sum(c for _, c in key)] += w
        h = mpmath.fsum(by_k)
        log_mass = np.array([float(mpmath.log(v)) if v > 0 else -math.inf for v in by_k])
        log_h = float(mpmath.log(h))
    return float(h), CycleCountDistribution(n, log_mass, log_h)
