"""Saddle-point asymptotics for coefficients of exp(g) and for the cycle count.

The central object is the saddle point r_x, the root of a(r) = r g'(r) = x
on (0, rho). Near rho it is located in the variable log(rho - r), away from
rho in log r, so both regimes keep full relative precision.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .weights import (
    WeightModel,
    b_over_a,
    derivs,
    euler_derivs,
    known_log_admissible,
    log_a,
    log_g,
    log_shift,
)

RESIDUAL_RTOL = 1e-12
BRACKET_EDGE = 1e-14


class NonDivergentModelError(ValueError):
    """a(r) stays bounded on (0, rho): no saddle point for large x."""


class RegimeError(ValueError):
    """Requested estimate lies outside the regime where it is informative."""


class NonAdmissibleWarning(UserWarning):
    """Asymptotic formula evaluated for a model known not to be log-admissible."""


# ---------------------------------------------------------------------------
# saddle point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaddlePoint:
    model: WeightModel = field(repr=False)
    x: float
    r: float
    gap: float
    log_r: float
    log_g: float
    log_b: float
    residual: float
    eta: tuple[float, float, float, float] | None = None
    eta1_fd: float | None = None

    @property
    def g_at_r(self) -> float:
        return math.exp(self.log_g) if self.log_g < 709 else math.inf

    @property
    def b_at_r(self) -> float:
        return math.exp(self.log_b) if self.log_b < 709 else math.inf

    @property
    def eta1(self) -> float:
        """Closed form -x / b(r_x)."""
        return -self.x * math.exp(-self.log_b)


def _bracketed_newton(f, fprime, lo, hi, f_lo, f_hi, tol, max_iter=200):
    """Root of a monotone f on [lo, hi] with f(lo), f(hi) of opposite sign.

    Bisects until the bracket is narrow, then takes Newton steps, falling
    back to bisection whenever a step leaves the bracket or stalls.
    """
    if f_lo == 0:
        return lo, 0.0, 0
    if f_hi == 0:
        return hi, 0.0, 0
    increasing = f_hi > f_lo
    x = 0.5 * (lo + hi)
    fx = f(x)
    it = 0
    for it in range(1, max_iter + 1):
        if abs(fx) <= tol:
            break
        if (fx < 0) == increasing:
            lo = x
        else:
            hi = x
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            break
        step = None
        if hi - lo < 1.0:
            d = fprime(x)
            if d != 0 and math.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi:
                    step = cand
        x_new = step if step is not None else 0.5 * (lo + hi)
        f_new = f(x_new)
        if step is not None and abs(f_new) > 0.5 * abs(fx):
            # slow Newton progress: take a bisection step as well
            if (f_new < 0) == increasing:
                lo = x_new
            else:
                hi = x_new
            x_new = 0.5 * (lo + hi)
            f_new = f(x_new)
        x, fx = x_new, f_new
    return x, fx, it


def _locate(model: WeightModel, x: float):
    """(r, gap, log_r, log-residual) with log a(r) = log x."""
    if not x > 0 or not math.isfinite(x):
        raise ValueError("saddle target x must be positive and finite")
    rho = model.radius
    lx = math.log(x)
    half = 0.5 * rho
    f_half = log_a(model, half, rho - half) - lx
    tol = 2e-16  # iterate to rounding level: eta_k differentiates r_x up to 4 times
    if f_half >= 0:
        def f(t):
            r = math.exp(t)
            return log_a(model, r, rho - r) - lx

        def fp(t):
            r = math.exp(t)
            return b_over_a(model, r, rho - r)

        hi = math.log(half)
        lo = hi - 1.0
        f_lo = f(lo)
        while f_lo >= 0:
            lo = hi - 2.0 * (hi - lo)
            if lo < -740:
                raise ValueError(f"saddle point for x={x} underflows")
            f_lo = f(lo)
        t, ft, _ = _bracketed_newton(f, fp, lo, hi, f_lo, f_half, tol)
        r = math.exp(t)
        return r, rho - r, t, ft

    def f(v):
        w = math.exp(v)
        return log_a(model, rho - w, w) - lx

    def fp(v):
        w = math.exp(v)
        r = rho - w
        return -b_over_a(model, r, w) * w / r

    v_lo = math.log(rho * BRACKET_EDGE)
    v_hi = math.log(rho - half)
    f_lo = f(v_lo)
    if not f_lo > 0:
        raise NonDivergentModelError(
            f"a(r) stays below x={x:g} on (0, rho(1-1e-14)); the model is not divergent at rho")
    v, fv, _ = _bracketed_newton(f, fp, v_lo, v_hi, f_lo, f_half, tol)
    w = math.exp(v)
    r = rho - w
    return r, w, math.log(rho) + math.log1p(-w / rho), fv


def solve_saddle(model: WeightModel, x: float, with_eta: bool = True, h: float = 1e-3) -> SaddlePoint:
    """Solve a(r) = x and fill g(r_x), b(r_x) and, optionally, eta_1..eta_4."""
    r, gap, lr, res = _locate(model, x)
    residual = abs(math.expm1(res))
    if residual > RESIDUAL_RTOL:
        raise ArithmeticError(f"saddle residual {residual:.2e} above {RESIDUAL_RTOL:g} at x={x}")
    lb = log_a(model, r, gap) + math.log(b_over_a(model, r, gap))
    sp = SaddlePoint(model, float(x), r, gap, lr, log_g(model, r, gap), lb, residual)
    if not with_eta:
        return sp
    eta_fd = eta_derivatives(model, x, h=h)
    eta = (sp.eta1,) + tuple(eta_fd[1:])
    return SaddlePoint(model, float(x), r, gap, lr, sp.log_g, lb, residual, eta, eta_fd[0])


def _fd_derivatives(f, h: float):
    """First four derivatives at 0 by central differences with one Richardson step."""
    pts = {j: f(j * h) for j in (-4, -2, -1, 0, 1, 2, 4)}

    def stencil(step):
        p = {1: pts[step], -1: pts[-step], 2: pts[2 * step], -2: pts[-2 * step], 0: pts[0]}
        hh = step * h
        d1 = (p[1] - p[-1]) / (2 * hh)
        d2 = (p[1] - 2 * p[0] + p[-1]) / hh**2
        d3 = (p[2] - 2 * p[1] + 2 * p[-1] - p[-2]) / (2 * hh**3)
        d4 = (p[2] - 4 * p[1] + 6 * p[0] - 4 * p[-1] + p[-2]) / hh**4
        return np.array([d1, d2, d3, d4])

    return (4.0 * stencil(1) - stencil(2)) / 3.0


HIGH_ORDER_STEP_FACTOR = 16


def eta_derivatives(model: WeightModel, x: float, k_max: int = 4, h: float = 1e-3) -> tuple[float, ...]:
    """eta_k(x) = (-1)^k d^k/ds^k log r_{e^s x} at s = 0, k = 1..k_max, by finite differences.

    Orders 3 and 4 use a step 16 h: log r is only known to an absolute ulp,
    and h^-4 amplification at h = 1e-3 leaves errors of order one.
    """
    if not 1 <= k_max <= 4:
        raise ValueError("k_max must be between 1 and 4")

    def f(s):
        return _locate(model, x * math.exp(s))[2]

    d = _fd_derivatives(f, h)
    if k_max > 2:
        d[2:] = _fd_derivatives(f, HIGH_ORDER_STEP_FACTOR * h)[2:]
    return tuple(float((-1) ** (k + 1) * d[k]) for k in range(k_max))


# ---------------------------------------------------------------------------
# asymptotic formulas
# ---------------------------------------------------------------------------


def _warn_if_not_admissible(model: WeightModel) -> None:
    if known_log_admissible(model) is False:
        warnings.warn(f"{model} is not log-admissible; the saddle formula is only indicative",
                      NonAdmissibleWarning, stacklevel=3)


def asymptotic_coefficient(model: WeightModel, n: int, s: float = 0.0) -> float:
    """Saddle-point value of log G_{n,s}, G_{n,s} = [t^n] exp(e^{-s} g(t)).

    No (1 + o(1)) correction is attempted. ``g`` includes its constant term,
    so for families with g(0) != 0 the value differs from the exact table of
    exp(g - g(0)) by e^{-s} g(0).
    """
    _warn_if_not_admissible(model)
    sp = solve_saddle(model, math.exp(s) * n, with_eta=False)
    return (-0.5 * math.log(2 * math.pi) + 0.5 * s - n * sp.log_r - 0.5 * sp.log_b
            + math.exp(-s) * sp.g_at_r)


def asymptotic_mgf(model: WeightModel, n: int, s: float) -> float:
    """log E exp(-s K_n) from the ratio of saddle-point coefficients."""
    return asymptotic_coefficient(model, n, s) - asymptotic_coefficient(model, n, 0.0)


@dataclass(frozen=True)
class AsymptoticMoments:
    n: float
    mu: float
    sigma2: float
    xi: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def valid(self) -> bool:
        """False while sigma2 <= 0, i.e. the asymptotics have not kicked in yet."""
        return self.sigma2 > 0

    @property
    def sigma(self) -> float:
        if not self.valid:
            raise RegimeError(f"asymptotics not yet valid at n={self.n}: sigma^2={self.sigma2}")
        return math.sqrt(self.sigma2)


def _g_plus_x_eta(model: WeightModel, x: float) -> float:
    sp = solve_saddle(model, x, with_eta=False)
    return sp.g_at_r + x * x * math.exp(-sp.log_b)


def xi_grid(n: float, M: float = 1.0, points: int = 9) -> np.ndarray:
    return n * np.exp(np.linspace(-M, M, points))


def asymptotic_moments(model: WeightModel, n: float, M: float = 1.0, points: int = 9) -> AsymptoticMoments:
    """mu_n = g(r_n), sigma_n^2 = g(r_n) + n eta_1(n), and the cubic error scale xi(n).

    xi(n) = sup g(r_x) + x |eta_1(x)| over [e^-M n, e^M n], approximated by
    the maximum over a geometric grid.
    """
    sp = solve_saddle(model, n, with_eta=False)
    mu = sp.g_at_r
    n_eta1 = n * sp.eta1
    xi = max(_g_plus_x_eta(model, float(x)) for x in xi_grid(n, M, points))
    return AsymptoticMoments(n, mu, mu + n_eta1, xi,
                             {"r": sp.r, "gap": sp.gap, "n_eta1": n_eta1, "b": sp.b_at_r})


def closed_form_algebraic(beta: float, gamma: float, n: float, M: float = 1.0) -> AsymptoticMoments:
    """Leading-order moments for g = gamma (1 - t)^(-beta).

    mu ~ gamma^(1/(beta+1)) beta^(-beta/(beta+1)) n^(beta/(beta+1)) and
    sigma^2 ~ (beta gamma)^(1/(beta+1)) n^(beta/(beta+1)) / (beta (beta+1)).
    """
    if not (beta > 0 and gamma > 0):
        raise ValueError("beta and gamma must be positive")
    p = beta / (beta + 1)
    mu_c = gamma ** (1 / (beta + 1)) * beta ** (-p)
    eta_c = (beta * gamma) ** (1 / (beta + 1)) / (beta + 1)
    mu = mu_c * n**p
    sigma2 = (mu_c - eta_c) * n**p
    xi = (mu_c + eta_c) * (math.exp(M) * n) ** p
    return AsymptoticMoments(n, mu, sigma2, xi, {"n_eta1": -eta_c * n**p, "exponent": p})


def radius_expansion(beta: float, x: float) -> tuple[float, float]:
    """Expansion of f(x) = (1 - r_x)^(-beta) for g = exp((1 - t)^(-beta)).

    Returns (leading, refined) with leading = log x - (1 + 1/beta) log log x
    - log beta and refined adding (log x)^(-1/beta) + (1 + 1/beta) log log x / log x.
    """
    L = math.log(x)
    LL = math.log(L)
    c = 1 + 1 / beta
    lead = L - c * LL - math.log(beta)
    return lead, lead + L ** (-1 / beta) + c * LL / L


def closed_form_subexp(beta: float, n: float) -> AsymptoticMoments:
    """Leading-order moments for g = exp((1 - t)^(-beta)).

    mu = n / (log n)^(1 + 1/beta) and sigma^2 = (2 + 1/beta) n / (log n)^(2 + 1/beta);
    ``details`` carries the refined expansions of g(r_n), n eta_1(n) and of
    (1 - r_n)^(-beta).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if n < 3:
        raise ValueError("n must be at least 3")
    L = math.log(n)
    LL = math.log(L)
    c = 1 + 1 / beta
    base = n / L**c
    mu = base
    sigma2 = (2 + 1 / beta) * n / L ** (1 + c)
    g_ref = base * (1 + L ** (-1 / beta) + c * LL / L)
    n_eta1_ref = -base * (1 + L ** (-1 / beta) - c / L)
    lead, refined = radius_expansion(beta, n)
    return AsymptoticMoments(n, mu, sigma2, math.nan, {
        "g_refined": g_ref,
        "n_eta1_refined": n_eta1_ref,
        "sigma2_refined": g_ref + n_eta1_ref,
        "f_leading": lead,
        "f_refined": refined,
    })


def saddle_exponent(model: WeightModel, x: float) -> float:
    """(1 - r_x/rho)^(-beta) computed from the exact gap (subexp models)."""
    sp = solve_saddle(model, x, with_eta=False)
    return (sp.gap / model.radius) ** (-model.beta)


# ---------------------------------------------------------------------------
# technical condition on r_x
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TechnicalReport:
    applicable: bool
    passed: bool
    x_grid: np.ndarray
    ratios: np.ndarray  # columns k = 2, 3, 4
    bound: float
    message: str = ""


def scaled_radius_derivatives(model: WeightModel, x: float, h: float = 1e-2) -> np.ndarray:
    """x^k r_x^{(k)} for k = 1..4 via finite differences in log x."""
    rho = model.radius

    def gap_at(s):
        return _locate(model, x * math.exp(s))[1]

    d = -_fd_derivatives(gap_at, h)  # derivatives of r = rho - gap in s = log x
    d1, d2, d3, d4 = d
    return np.array([d1, d2 - d1, d3 - 3 * d2 + 2 * d1, d4 - 6 * d3 + 11 * d2 - 6 * d1])


def check_technical_condition(model: WeightModel, x_grid=None, k_values=(2, 3, 4),
                              bound: float = 10.0) -> TechnicalReport:
    """|r^{(k)} x^k| / |r^{(k-1)} x^{k-1}| stays below ``bound`` along the grid."""
    xs = np.asarray(x_grid if x_grid is not None else np.geomspace(1e2, 1e6, 9), dtype=float)
    ratios = np.full((xs.size, 3), np.nan)
    try:
        for i, x in enumerate(xs):
            sd = np.abs(scaled_radius_derivatives(model, float(x)))
            ratios[i] = sd[1:] / sd[:-1]
    except NonDivergentModelError as exc:
        return TechnicalReport(False, False, xs, ratios, bound, f"not applicable: {exc}")
    cols = [k - 2 for k in k_values]
    sel = ratios[:, cols]
    passed = bool(np.all(np.isfinite(sel)) and np.all(sel <= bound))
    return TechnicalReport(True, passed, xs, ratios, bound)


# ---------------------------------------------------------------------------
# large deviations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LargeDeviationEstimate:
    a: float
    eps: float
    estimate: float
    log_estimate: float
    prefactor: float
    delta_scale: float
    tilt: float
    moments: AsymptoticMoments
    regime_valid: bool = True

    @property
    def lower_bound(self) -> float:
        """prefactor * estimate, the leading form of the two-sided window probability."""
        return self.prefactor * self.estimate


def cumulant_function(model: WeightModel, n: int, mom: AsymptoticMoments | None = None):
    """Lambda(s) = log E exp(s (K - mu)/sigma) from the saddle-point coefficients."""
    mom = mom or asymptotic_moments(model, n)
    sigma = mom.sigma
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonAdmissibleWarning)
        base = asymptotic_coefficient(model, n, 0.0)

    def Lam(s):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonAdmissibleWarning)
            return asymptotic_coefficient(model, n, -s / sigma) - base - s * mom.mu / sigma

    return Lam


def large_deviation_estimate(model: WeightModel, n: int, a: float, eps: float,
                             M: float = 1.0, strict: bool = True) -> LargeDeviationEstimate:
    """Leading estimate of P(|X_n - a| < eps) with X_n = (K_n - mu_n) / sigma_n.

    Returns exp(-a^2/2) with the prefactor 1 - eps^-2, the error scale
    xi(n) sigma^-3 a and the tilt s solving Lambda'(s) = a. With
    ``strict=False`` an error scale >= 1 is recorded in ``regime_valid``
    instead of raising.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    mom = asymptotic_moments(model, n, M)
    if not mom.valid:
        raise RegimeError(f"asymptotics not yet valid at n={n}")
    delta_scale = mom.xi * mom.sigma2 ** -1.5 * abs(a)
    regime_valid = delta_scale < 1
    if strict and not regime_valid:
        raise RegimeError(f"regime invalid: xi sigma^-3 a = {delta_scale:.3g} >= 1")
    Lam = cumulant_function(model, n, mom)

    def dLam(s):
        hstep = 1e-4 * max(1.0, abs(s))
        return (Lam(s + hstep) - Lam(s - hstep)) / (2 * hstep) - a

    span = 2.0 + 2.0 * abs(a)
    lo, hi = a - span, a + span
    for _ in range(20):
        if dLam(lo) < 0 < dLam(hi):
            break
        lo, hi = lo - span, hi + span
    s_star = brentq(dLam, lo, hi, xtol=1e-10)
    return LargeDeviationEstimate(
        a=a,
        eps=eps,
        estimate=math.exp(-a * a / 2),
        log_estimate=-a * a / 2,
        prefactor=1 - eps**-2,
        delta_scale=delta_scale,
        tilt=s_star,
        moments=mom,
        regime_valid=regime_valid,
    )


# ---------------------------------------------------------------------------
# log-admissibility checker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSpec:
    """Family of arc half-widths delta(r).

    ``power``:      delta = (1 - r/rho)^alpha
    ``exp_decay``:  delta = exp(-alpha (1 - r/rho)^(-beta))
    """

    form: str
    alpha: float
    beta: float | None = None

    @classmethod
    def parse(cls, text: str) -> "DeltaSpec":
        form, _, alpha = text.partition(":")
        form = form.strip()
        if form not in ("power", "exp_decay"):
            raise ValueError(f"unknown delta form {form!r}")
        return cls(form, float(alpha))

    def log_delta(self, model: WeightModel, gap: float) -> float:
        x = gap / model.radius
        if self.form == "power":
            return self.alpha * math.log(x)
        beta = self.beta if self.beta is not None else (model.beta if model.kind == "subexp" else 1.0)
        return -self.alpha * x**-beta

    def __str__(self) -> str:
        return f"{self.form}:{self.alpha:g}"


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    passed: bool
    margins: np.ndarray
    detail: str = ""


@dataclass(frozen=True)
class AdmissibilityReport:
    model: WeightModel
    delta: DeltaSpec
    gaps: np.ndarray
    r_grid: np.ndarray
    phi_grid: np.ndarray
    conditions: dict
    eps_values: tuple = (0.1, 1.0)
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.conditions.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.conditions.items() if not v.passed]

    def rows(self):
        """(condition, r, margin, verdict) rows for CSV export."""
        for name, v in self.conditions.items():
            for r, m in zip(self.r_grid, v.margins):
                yield name, float(r), float(m), "pass" if v.passed else "fail"


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _circle_point(r: float, gap: float, phi: np.ndarray):
    """(z, rho - z) on the circle |z| = r without cancellation near phi = 0."""
    z = r * np.exp(1j * phi)
    w = gap + 2 * r * np.sin(phi / 2) ** 2 - 1j * r * np.sin(phi)
    return z, w


def _euler3_on_arc(model, r, gap, phi, shift):
    z, w = _circle_point(r, gap, phi)
    return euler_derivs(model, z, w, shift)[3]


def remainder_on_arc(model: WeightModel, r: float, gap: float, phi: float, shift: float = 0.0) -> complex:
    """g(r e^{i phi}) - g(r) - i phi a(r) + phi^2 b(r)/2, times exp(-shift).

    Computed as the integral of the third derivative in phi (no cancellation).
    """
    return _remainder_scaled(model, r, gap, 0.0, phi, shift) if phi else 0j


def _remainder_scaled(model, r, gap, log_delta, tau, shift):
    """delta^-3 R(delta tau) by Gauss-Legendre panels; with log_delta = 0 this is R(tau)."""
    delta = math.exp(log_delta)
    span = delta * abs(tau)
    panels = int(min(64, max(1, math.ceil(4 * span / max(gap, 1e-300)))))
    edges = np.linspace(0.0, tau, panels + 1)
    total = 0j
    for p in range(panels):
        a0, a1 = edges[p], edges[p + 1]
        sig = 0.5 * (a1 - a0) * _GL_X + 0.5 * (a1 + a0)
        wts = 0.5 * (a1 - a0) * _GL_W
        d3 = _euler3_on_arc(model, r, gap, delta * sig, shift)
        # psi'''(phi) = -i D^3 g(r e^{i phi})
        total += np.sum(wts * (-1j) * d3 * (tau - sig) ** 2 / 2)
    return total


def _strictly_monotone_tail(values, increasing: bool, tail_fraction: float) -> bool:
    v = np.asarray(values, dtype=float)
    start = int(math.floor(v.size * (1 - tail_fraction)))
    t = v[start:]
    if t.size < 2 or not np.all(np.isfinite(t) | (t == (np.inf if increasing else -np.inf))):
        return False
    d = np.diff(t)
    return bool(np.all(d > 0) if increasing else np.all(d < 0))


def default_r_gaps(model: WeightModel, j_min: int = 4, j_max: int = 20) -> np.ndarray:
    return model.radius * 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)


def check_admissibility(model: WeightModel, delta: DeltaSpec | str, r_grid=None, phi_grid=None,
                        eps_values=(0.1, 1.0), tail_fraction: float = 0.5,
                        min_log_growth: float = 0.05) -> AdmissibilityReport:
    """Check the four log-admissibility conditions on finite grids.

    approximation  c(r) = max_{|phi| <= delta} |R(r, phi)| / (|phi|/delta)^3 is
                   eventually strictly decreasing along the r grid
    divergence     a and b strictly increase (last log-increment at least
                   ``min_log_growth``) and delta strictly decreases
    width          delta^2 b / log b is eventually strictly increasing, which
                   is equivalent to eps delta^2 b - log b -> inf for every eps;
                   the values of eps delta^2 b - log b are recorded
    monotonicity   Re g(r e^{i phi}) <= Re g(r e^{i delta}) for |phi| > delta
                   on ``phi_grid`` plus points clustered just outside delta

    "Eventually" means over the last ``tail_fraction`` of the grid. Everything
    is evaluated in log form, relative to g(r) when g overflows.
    """
    if isinstance(delta, str):
        delta = DeltaSpec.parse(delta)
    rho = model.radius
    if r_grid is None:
        gaps = default_r_gaps(model)
        rs = rho - gaps
    else:
        rs = np.asarray(r_grid, dtype=float)
        gaps = rho - rs
    phis = np.asarray(phi_grid if phi_grid is not None else np.linspace(-math.pi, math.pi, 2049), dtype=float)
    taus = np.array([1 / 16, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 1.0])

    log_c, log_a_v, log_b_v, log_d = [], [], [], []
    width_ratio, width_vals, mono_margin = [], {e: [] for e in eps_values}, []
    for r, gap in zip(rs, gaps):
        r, gap = float(r), float(gap)
        shift = log_shift(model, r, gap)
        ld = min(delta.log_delta(model, gap), math.log(math.pi))
        la = log_a(model, r, gap)
        lb = la + math.log(b_over_a(model, r, gap))
        log_a_v.append(la)
        log_b_v.append(lb)
        log_d.append(ld)

        # approximation
        worst = 0.0
        for tau in np.concatenate((-taus, taus)):
            val = abs(_remainder_scaled(model, r, gap, ld, float(tau), shift)) / abs(tau) ** 3
            worst = max(worst, val)
        log_c.append(3 * ld + math.log(worst) + shift if worst > 0 else -math.inf)

        # width: log(delta^2 b) - log(log b)
        l1 = 2 * ld + lb
        width_ratio.append(l1 - math.log(lb) if lb > 0 else math.inf)
        for e in eps_values:
            width_vals[e].append(math.exp(min(math.log(e) + l1, 700.0)) - lb)

        # monotonicity
        delta_v = math.exp(ld)
        base = phis[np.abs(phis) > delta_v]
        if ld > math.log(math.pi) - 1e-12:
            near = np.empty(0)
        else:
            near = np.exp(ld + np.log1p(np.geomspace(1e-3, math.pi / delta_v - 1, 200))) if delta_v > 0 else np.empty(0)
            near = near[(near > delta_v) & (near <= math.pi)]
        test_phi = np.concatenate((base, near, -near))
        z_d, w_d = _circle_point(r, gap, np.array([delta_v]))
        rhs = float(np.real(derivs(model, z_d, w_d, shift)[0])[0])
        scale = abs(math.exp(log_g(model, r, gap) - shift)) if model.kind != "subexp" else 1.0
        if test_phi.size:
            z, w = _circle_point(r, gap, test_phi)
            lhs = np.real(derivs(model, z, w, shift)[0])
            mono_margin.append(float(np.min(rhs - lhs)) / scale)
        else:
            mono_margin.append(math.inf)

    log_c = np.array(log_c)
    log_a_v, log_b_v, log_d = map(np.array, (log_a_v, log_b_v, log_d))
    width_ratio = np.array(width_ratio)
    mono_margin = np.array(mono_margin)

    approx_ok = _strictly_monotone_tail(log_c, increasing=False, tail_fraction=tail_fraction)
    div_ok = bool(
        np.all(np.diff(log_a_v) > 0) and np.all(np.diff(log_b_v) > 0) and np.all(np.diff(log_d) < 0)
        and log_a_v[-1] - log_a_v[-2] >= min_log_growth and log_b_v[-1] - log_b_v[-2] >= min_log_growth
    )
    width_ok = _strictly_monotone_tail(width_ratio, increasing=True, tail_fraction=tail_fraction)
    mono_ok = bool(np.all(mono_margin >= -1e-12))

    conditions = {
        "approximation": ConditionVerdict("approximation", approx_ok, log_c,
                                          "log c(r), c = max |R| / (|phi|/delta)^3"),
        "divergence": ConditionVerdict("divergence", div_ok, log_b_v, "log b(r)"),
        "width": ConditionVerdict("width", width_ok, width_ratio, "log(delta^2 b) - log log b"),
        "monotonicity": ConditionVerdict("monotonicity", mono_ok, mono_margin,
                                         "min (Re g(re^{i delta}) - Re g(re^{i phi})) / |g(r)|"),
    }
    diagnostics = {"log_a": log_a_v, "log_delta": log_d,
                   **{f"width_eps_{e:g}": np.array(v) for e, v in width_vals.items()}}
    return AdmissibilityReport(model, delta, np.asarray(gaps), np.asarray(rs), phis, conditions,
                               tuple(eps_values), diagnostics)
