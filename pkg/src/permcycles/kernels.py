"""Hot inner loops.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version. The public names dispatch to the numba version
unless numba is missing or ``PERMCYCLES_NO_NUMBA`` is set. Both versions are
kept importable (``*_numpy`` / ``*_numba``) so tests and the benchmark can
compare them directly.

All coefficient arithmetic is in log-space: entries are natural logs and
``-inf`` encodes an exact zero.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import HAVE_NUMBA, njit

NEG_INF = -np.inf
# terms below exp(-SKIP) times the running reference are not evaluated
SKIP = 60.0
SKIP_MASS = math.exp(-SKIP)

__all__ = [
    "log_power_recurrence",
    "log_cycle_rows",
    "first_cycle_moments",
    "draw_cycles",
    "HAVE_NUMBA",
]


# ---------------------------------------------------------------------------
# numpy versions
# ---------------------------------------------------------------------------


def _lse(v: np.ndarray) -> float:
    m = v.max()
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(np.exp(v - m).sum())


def _lse_rows(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1)
    safe = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.exp(a - safe[:, None]).sum(axis=1))
    out[np.isneginf(m)] = NEG_INF
    return out


def log_power_recurrence_numpy(log_w: np.ndarray, log_c0: float, N: int) -> np.ndarray:
    """Coefficients of exp(F) where F has coefficients w_j / j, in log-space.

    Solves ``n c_n = sum_{j=1}^n w_j c_{n-j}`` with ``c_0 = exp(log_c0)``.
    ``log_w`` is indexed from 0 (entry 0 ignored) and must have length > N.
    """
    out = np.full(N + 1, NEG_INF)
    out[0] = log_c0
    for n in range(1, N + 1):
        terms = log_w[1 : n + 1] + out[n - 1 :: -1]
        v = _lse(terms)
        out[n] = v - math.log(n) if v != NEG_INF else NEG_INF
    return out


def log_cycle_rows_numpy(log_theta: np.ndarray, n: int, k_max: int, block: int = 256) -> np.ndarray:
    """log h_{n,k} for k = 0..k_max, h_{n,k} = [q^k t^n] exp(q g(t)).

    Row k (as a function of m) is obtained from row k-1 by
    ``m h_{m,k} = sum_j theta_j h_{m-j,k-1}``; only two rows are kept.
    """
    out = np.full(k_max + 1, NEG_INF)
    prev = np.full(n + 1, NEG_INF)
    prev[0] = 0.0
    out[0] = prev[n]
    if n == 0:
        return out
    lt = log_theta[1 : n + 1]
    log_m = np.log(np.arange(1, n + 1, dtype=np.float64))
    for k in range(1, k_max + 1):
        if k > n:
            break
        # padded[n + i] = prev[i]; window m reversed gives prev[m-1], ..., prev[m-n]
        padded = np.concatenate((np.full(n, NEG_INF), prev))
        windows = np.lib.stride_tricks.sliding_window_view(padded, n)
        cur = np.full(n + 1, NEG_INF)
        for m0 in range(k, n + 1, block):
            m1 = min(m0 + block, n + 1)
            width = m1 - 1 - k + 1  # j <= m - k + 1
            w = windows[m0:m1, ::-1][:, :width]
            cur[m0:m1] = _lse_rows(w + lt[None, :width]) - log_m[m0 - 1 : m1 - 1]
        out[k] = cur[n]
        prev = cur
    return out


def first_cycle_moments_numpy(log_theta: np.ndarray, log_h: np.ndarray, N: int):
    """Mean and variance of the cycle count for every n <= N.

    Conditions on the length j of the cycle through a marked point, which has
    probability theta_j h_{n-j} / (n h_n); then K_n = 1 + K_{n-j}.
    """
    mean = np.zeros(N + 1)
    var = np.zeros(N + 1)
    for n in range(1, N + 1):
        if log_h[n] == NEG_INF:
            mean[n] = np.nan
            var[n] = np.nan
            continue
        lp = log_theta[1 : n + 1] + log_h[n - 1 :: -1] - math.log(n) - log_h[n]
        p = np.exp(lp)
        p /= p.sum()
        prev_mean = mean[n - 1 :: -1]
        prev_var = var[n - 1 :: -1]
        ok = p > 0
        m = float(np.dot(p[ok], 1.0 + prev_mean[ok]))
        d = 1.0 + prev_mean[ok] - m
        mean[n] = m
        var[n] = float(np.dot(p[ok], prev_var[ok] + d * d))
    return mean, var


def draw_cycles_numpy(cdf: np.ndarray, offsets: np.ndarray, n: int, uniforms: np.ndarray,
                      counts: np.ndarray | None = None) -> np.ndarray:
    """Draw cycle types by repeated first-cycle sampling.

    Sample i uses ``uniforms[i, t]`` for its t-th cycle, so the result is the
    same whichever backend runs it. Row m of the inverse-CDF table is
    ``cdf[offsets[m] : offsets[m] + m]``.
    """
    S = uniforms.shape[0]
    K = np.zeros(S, dtype=np.int64)
    if n == 0:
        return K
    remaining = np.full(S, n, dtype=np.int64)
    idx = np.arange(S)
    t = 0
    while idx.size:
        m = remaining[idx]
        u = uniforms[idx, t]
        lo = offsets[m].copy()
        hi = lo + m
        live = lo < hi
        while live.any():
            mid = (lo + hi) // 2
            right = live & (cdf[np.minimum(mid, cdf.size - 1)] <= u)
            left = live & ~right
            lo = np.where(right, mid + 1, lo)
            hi = np.where(left, mid, hi)
            live = lo < hi
        j = np.minimum(lo - offsets[m] + 1, m)
        if counts is not None:
            np.add.at(counts, (idx, j), 1)
        remaining[idx] = m - j
        K[idx] += 1
        idx = idx[remaining[idx] > 0]
        t += 1
    return K


# ---------------------------------------------------------------------------
# numba versions
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _log_dot(log_a, log_b, m, top, ref):
        """log sum_{j=1}^{top} exp(log_a[j] + log_b[m - j]).

        One pass scaled by ``ref`` (a guess at the answer, typically the
        previous sum) that skips terms below exp(-SKIP) relative to it; the
        skipped mass is bounded and the pass is redone exactly when that
        bound is not negligible or the scaled sum leaves the safe range.
        """
        if ref > -np.inf:
            s = 0.0
            skipped = 0
            for j in range(1, top + 1):
                x = log_a[j] + log_b[m - j] - ref
                if x > -SKIP:
                    s += math.exp(x)
                else:
                    skipped += 1
            if 1e-250 < s < 1e250 and skipped * SKIP_MASS <= 1e-17 * s:
                return ref + math.log(s)
        mx = -np.inf
        for j in range(1, top + 1):
            v = log_a[j] + log_b[m - j]
            if v > mx:
                mx = v
        if mx == -np.inf:
            return -np.inf
        s = 0.0
        for j in range(1, top + 1):
            s += math.exp(log_a[j] + log_b[m - j] - mx)
        return mx + math.log(s)

    @njit(cache=True)
    def log_power_recurrence_numba(log_w, log_c0, N):
        out = np.full(N + 1, -np.inf)
        out[0] = log_c0
        ref = -np.inf
        for n in range(1, N + 1):
            v = _log_dot(log_w, out, n, n, ref)
            ref = v
            if v > -np.inf:
                out[n] = v - math.log(n)
        return out

    @njit(cache=True)
    def log_cycle_rows_numba(log_theta, n, k_max):
        out = np.full(k_max + 1, -np.inf)
        prev = np.full(n + 1, -np.inf)
        cur = np.full(n + 1, -np.inf)
        prev[0] = 0.0
        out[0] = prev[n]
        if n == 0:
            return out
        for k in range(1, k_max + 1):
            if k > n:
                break
            for m in range(0, k):
                cur[m] = -np.inf
            ref = -np.inf
            for m in range(k, n + 1):
                v = _log_dot(log_theta, prev, m, m - k + 1, ref)
                ref = v
                cur[m] = v - math.log(m) if v > -np.inf else -np.inf
            out[k] = cur[n]
            prev, cur = cur, prev
        return out

    @njit(cache=True)
    def first_cycle_moments_numba(log_theta, log_h, N):
        mean = np.zeros(N + 1)
        var = np.zeros(N + 1)
        p = np.empty(N + 1)
        for n in range(1, N + 1):
            if log_h[n] == -np.inf:
                mean[n] = np.nan
                var[n] = np.nan
                continue
            base = math.log(n) + log_h[n]
            tot = 0.0
            for j in range(1, n + 1):
                p[j] = math.exp(log_theta[j] + log_h[n - j] - base)
                tot += p[j]
            m = 0.0
            for j in range(1, n + 1):
                p[j] /= tot
                if p[j] > 0.0:
                    m += p[j] * (1.0 + mean[n - j])
            v = 0.0
            for j in range(1, n + 1):
                if p[j] > 0.0:
                    d = 1.0 + mean[n - j] - m
                    v += p[j] * (var[n - j] + d * d)
            mean[n] = m
            var[n] = v
        return mean, var

    @njit(cache=True)
    def _draw_cycles_numba(cdf, offsets, n, uniforms, counts, record):
        S = uniforms.shape[0]
        K = np.zeros(S, dtype=np.int64)
        for i in range(S):
            m = n
            t = 0
            k = 0
            while m > 0:
                u = uniforms[i, t]
                t += 1
                lo = offsets[m]
                hi = lo + m
                start = lo
                while lo < hi:
                    mid = (lo + hi) // 2
                    if cdf[mid] <= u:
                        lo = mid + 1
                    else:
                        hi = mid
                j = lo - start + 1
                if j > m:
                    j = m
                if record:
                    counts[i, j] += 1
                m -= j
                k += 1
            K[i] = k
        return K

    def draw_cycles_numba(cdf, offsets, n, uniforms, counts=None):
        if counts is None:
            return _draw_cycles_numba(cdf, offsets, n, uniforms, np.zeros((1, 1), dtype=np.int64), False)
        return _draw_cycles_numba(cdf, offsets, n, uniforms, counts, True)

    log_power_recurrence = log_power_recurrence_numba
    log_cycle_rows = log_cycle_rows_numba
    first_cycle_moments = first_cycle_moments_numba
    draw_cycles = draw_cycles_numba
else:
    log_power_recurrence = log_power_recurrence_numpy
    log_cycle_rows = log_cycle_rows_numpy
    first_cycle_moments = first_cycle_moments_numpy
    draw_cycles = draw_cycles_numpy
