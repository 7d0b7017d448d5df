"""Exact sampling of cycle types and Monte Carlo summaries of the cycle count.

A cycle type of size n is drawn by repeatedly choosing the length j of the
cycle through a marked point, P(J = j) = theta_j h_{m-j} / (m h_m) with m the
number of points left. Inverse-CDF rows for every m <= n are precomputed once.

Randomness: samples are produced in fixed-size chunks and chunk c uses the
Philox stream ``SeedSequence(seed, spawn_key=(c,))``, so results depend only
on (seed, n, N) and both kernel backends consume identical uniforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from . import kernels
from .exact import ConsistencyError, CycleCountDistribution, ExactTable, compute_h
from .weights import WeightModel, log_theta

SAMPLER_MAX_N = 5000
NORMALISATION_TOL = 1e-9
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class CycleType:
    n: int
    counts: dict[int, int]

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("cycle counts must be nonnegative")
        if sum(j * c for j, c in self.counts.items()) != self.n:
            raise ValueError("sum of j * c_j must equal n")

    @property
    def k(self) -> int:
        return sum(self.counts.values())

    def key(self) -> tuple:
        return tuple(sorted((j, c) for j, c in self.counts.items() if c))


@dataclass(frozen=True)
class FirstCycleTable:
    """Inverse-CDF rows: row m is ``cdf[offsets[m] : offsets[m] + m]``."""

    n: int
    cdf: np.ndarray
    offsets: np.ndarray

    def row(self, m: int) -> np.ndarray:
        return self.cdf[self.offsets[m] : self.offsets[m] + m]


def first_cycle_table(model: WeightModel, n: int, table: ExactTable | None = None) -> FirstCycleTable:
    """Build the per-m cumulative first-cycle-length laws, checking each sums to 1."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > SAMPLER_MAX_N:
        raise ValueError(f"sampler tables are limited to n <= {SAMPLER_MAX_N} (memory ~ n^2/2 doubles)")
    if table is None or table.N < n:
        table = compute_h(model, n)
    lt = log_theta(model, max(n, 1))
    lh = table.log_h
    offsets = np.zeros(n + 1, dtype=np.int64)
    offsets[1:] = np.arange(n) * np.arange(1, n + 1) // 2
    cdf = np.empty(n * (n + 1) // 2)
    for m in range(1, n + 1):
        if lh[m] == -math.inf:
            raise ConsistencyError(f"h_{m} = 0: no permutation of size {m} has positive weight")
        p = np.exp(lt[1 : m + 1] + lh[m - 1 :: -1] - math.log(m) - lh[m])
        c = np.cumsum(p)
        if abs(c[-1] - 1.0) > NORMALISATION_TOL:
            raise ConsistencyError(f"first-cycle law at m={m} sums to {c[-1]!r}; table is corrupt")
        c /= c[-1]
        c[-1] = 1.0
        cdf[offsets[m] : offsets[m] + m] = c
    cdf.setflags(write=False)
    return FirstCycleTable(n, cdf, offsets)


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream number ``index`` of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def chunk_size(n: int) -> int:
    return max(1, _CHUNK_BUDGET // max(n, 1))


def _draw(fct: FirstCycleTable, uniforms: np.ndarray, counts: np.ndarray | None = None) -> np.ndarray:
    return kernels.draw_cycles(fct.cdf, fct.offsets, fct.n, uniforms, counts)


def sample_cycle_type(model: WeightModel, table: ExactTable, n: int, rng: np.random.Generator,
                      fct: FirstCycleTable | None = None) -> CycleType:
    """One cycle type drawn exactly from the weighted measure on S_n."""
    fct = fct if fct is not None and fct.n == n else first_cycle_table(model, n, table)
    counts = np.zeros((1, n + 1), dtype=np.int64)
    _draw(fct, rng.random((1, max(n, 1))), counts)
    return CycleType(n, {j: int(c) for j, c in enumerate(counts[0]) if c})


def _chunks(n: int, N: int, seed: int):
    size = chunk_size(n)
    for c, start in enumerate(range(0, N, size)):
        rows = min(size, N - start)
        yield stream(seed, c).random((rows, max(n, 1)))


def sample_cycle_counts(model: WeightModel, n: int, N: int, seed: int,
                        table: ExactTable | None = None) -> np.ndarray:
    """N independent draws of K; reproducible from (seed, n, N)."""
    fct = first_cycle_table(model, n, table)
    out = [_draw(fct, u) for u in _chunks(n, N, seed)]
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def cycle_type_frequencies(model: WeightModel, n: int, N: int, seed: int,
                           table: ExactTable | None = None) -> dict[tuple, int]:
    """Counts of each sampled cycle type, keyed like ``CycleType.key()``."""
    fct = first_cycle_table(model, n, table)
    freq: dict[tuple, int] = {}
    for u in _chunks(n, N, seed):
        counts = np.zeros((u.shape[0], n + 1), dtype=np.int64)
        _draw(fct, u, counts)
        rows, mult = np.unique(counts, axis=0, return_counts=True)
        for row, c in zip(rows, mult):
            key = tuple((j, int(v)) for j, v in enumerate(row) if v)
            freq[key] = freq.get(key, 0) + int(c)
    return freq


# ---------------------------------------------------------------------------
# summaries and diagnostics
# ---------------------------------------------------------------------------


def _hist_moments(hist: np.ndarray) -> tuple[float, float]:
    total = int(hist.sum())
    k = np.arange(hist.size, dtype=np.float64)
    mean = math.fsum(hist * k) / total
    var = math.fsum(hist * (k - mean) ** 2) / total
    return mean, var


def _ks_from_cdf(values: np.ndarray, cdf_right: np.ndarray, cdf_left: np.ndarray, mu, sigma) -> float:
    phi = ndtr((values - mu) / sigma)
    return float(max(np.max(np.abs(cdf_right - phi)), np.max(np.abs(cdf_left - phi))))


def ks_distance(data, mu: float, sigma: float) -> float:
    """Kolmogorov distance to the N(mu, sigma^2) law.

    For an exact ``CycleCountDistribution`` this is the continuity-corrected
    sup_k |P(K <= k) - Phi((k + 1/2 - mu)/sigma)|. For samples (an array of
    values or an ``McSummary``) it is the usual empirical KS statistic.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if isinstance(data, CycleCountDistribution):
        k = data.support.astype(np.float64)
        phi = ndtr((k + 0.5 - mu) / sigma)
        return float(np.max(np.abs(data.cdf() - phi)))
    if isinstance(data, McSummary):
        hist = data.histogram
    else:
        x = np.asarray(data)
        if x.size == 0:
            raise ValueError("no samples")
        if np.issubdtype(x.dtype, np.integer) and x.min() >= 0:
            hist = np.bincount(x)
        else:
            xs = np.sort(x.astype(np.float64))
            m = xs.size
            right = np.arange(1, m + 1) / m
            return _ks_from_cdf(xs, right, right - 1.0 / m, mu, sigma)
    return _ks_hist(hist, mu, sigma)


def _ks_hist(hist: np.ndarray, mu: float, sigma: float) -> float:
    occupied = np.flatnonzero(hist)
    cum = np.cumsum(hist) / hist.sum()
    right = cum[occupied]
    left = np.concatenate(([0.0], cum))[occupied]
    return _ks_from_cdf(occupied.astype(np.float64), right, left, mu, sigma)


@dataclass(frozen=True)
class McSummary:
    n: int
    N_samples: int
    seed: int | tuple
    histogram: np.ndarray = field(repr=False)
    mean: float = math.nan
    variance: float = math.nan
    ks_distance: float = math.nan

    @classmethod
    def from_histogram(cls, n: int, histogram: np.ndarray, seed) -> "McSummary":
        hist = np.asarray(histogram, dtype=np.int64)
        mean, var = _hist_moments(hist)
        ks = _ks_hist(hist, mean, math.sqrt(var)) if var > 0 else math.nan
        return cls(n, int(hist.sum()), seed, hist, mean, var, ks)

    def merge(self, other: "McSummary") -> "McSummary":
        """Pool two independent runs at the same n."""
        if other.n != self.n:
            raise ValueError("cannot merge summaries for different n")
        size = max(self.histogram.size, other.histogram.size)
        hist = np.zeros(size, dtype=np.int64)
        hist[: self.histogram.size] += self.histogram
        hist[: other.histogram.size] += other.histogram
        seeds = (self.seed if isinstance(self.seed, tuple) else (self.seed,)) + \
                (other.seed if isinstance(other.seed, tuple) else (other.seed,))
        return McSummary.from_histogram(self.n, hist, seeds)

    def to_dict(self) -> dict:
        return {"n": self.n, "samples": self.N_samples, "seed": self.seed, "mean": self.mean,
                "var": self.variance, "ks": self.ks_distance}


def monte_carlo(model: WeightModel, n: int, N_samples: int, seed: int,
                table: ExactTable | None = None) -> McSummary:
    """Sample K_n ``N_samples`` times and summarise."""
    if N_samples < 1:
        raise ValueError("N_samples must be at least 1")
    K = sample_cycle_counts(model, n, N_samples, seed, table)
    return McSummary.from_histogram(n, np.bincount(K, minlength=n + 1), seed)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    bins: int


def chi_square_test(histogram: np.ndarray, dist: CycleCountDistribution, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness of fit of a histogram of K against an exact pmf.

    Adjacent cells are pooled left to right until each expected count is at
    least ``min_expected``; a short final group joins its neighbour.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    p = dist.prob
    size = max(hist.size, p.size)
    obs = np.zeros(size)
    obs[: hist.size] = hist
    exp = np.zeros(size)
    exp[: p.size] = p * hist.sum()
    if np.any((exp == 0) & (obs > 0)):
        return ChiSquareResult(math.inf, 0, 0.0, 0)
    groups_o, groups_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            groups_o.append(acc_o)
            groups_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if groups_e:
            groups_o[-1] += acc_o
            groups_e[-1] += acc_e
        else:
            groups_o.append(acc_o)
            groups_e.append(acc_e)
    o = np.array(groups_o)
    e = np.array(groups_e)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(o) - 1
    pval = float(chi2.sf(stat, dof)) if dof > 0 else 1.0
    return ChiSquareResult(stat, dof, pval, len(o))
