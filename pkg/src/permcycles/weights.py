"""Cycle-weight sequences and their generating function g(t) = sum theta_k t^k / k.

Four families are supported:

* ``ewens``      theta_k = theta0,          g(t) = -theta0 log(1 - t)
* ``algebraic``  g(t) = gamma (1 - t)^(-beta)
* ``subexp``     g(t) = scale * exp((1 - t)^(-beta))
* ``explicit``   a finite list theta_1..theta_L, optionally continued by a
                 power-law tail theta_k = coef * k^exponent * radius^(-k)

Closed forms near the radius of convergence are evaluated in terms of the
gap ``w = rho - r`` so that saddle points very close to ``rho`` keep full
relative precision. Functions that take ``r`` accept an optional exact
``gap`` for that purpose.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import logsumexp

from .kernels import log_power_recurrence

KINDS = ("ewens", "algebraic", "subexp", "explicit")
DEFAULT_N_SERIES = 4096


class DomainError(ValueError):
    """Argument outside the disc of convergence."""


@dataclass(frozen=True)
class PowerTail:
    """theta_k = coef * k**exponent * radius**(-k) for k beyond the explicit list."""

    coef: float = 1.0
    exponent: float = 0.0

    def log_theta(self, k: np.ndarray, radius: float) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return math.log(self.coef) + self.exponent * np.log(k) - k * math.log(radius) if self.coef > 0 else np.full(k.shape, -np.inf)


@dataclass(frozen=True)
class WeightModel:
    """Immutable description of a weight sequence theta.

    Use the constructors :func:`ewens`, :func:`algebraic`,
    :func:`subexponential` and :func:`explicit` rather than building this
    directly.
    """

    kind: str
    theta0: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    scale: float = 1.0
    theta: tuple[float, ...] = ()
    tail: PowerTail | None = None
    radius: float = 1.0
    n_series: int = DEFAULT_N_SERIES
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.radius > 0:
            raise ValueError("radius of convergence must be positive")
        if self.kind != "explicit" and self.radius != 1.0:
            raise ValueError("parametric families have radius 1")
        if self.kind == "ewens" and not self.theta0 > 0:
            raise ValueError("ewens needs theta0 > 0")
        if self.kind in ("algebraic", "subexp") and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kind == "algebraic" and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if any(not (t >= 0) for t in self.theta):
            raise ValueError("weights must be nonnegative")
        if self.tail is not None and self.tail.coef < 0:
            raise ValueError("tail coefficient must be nonnegative")

    @property
    def rho(self) -> float:
        return self.radius

    @property
    def truncation(self) -> int:
        """Number of series terms used for explicit models."""
        if self.kind != "explicit":
            return 0
        return self.n_series if self.tail is not None else len(self.theta)

    def __str__(self) -> str:
        return json.dumps(to_descriptor(self))


def ewens(theta0: float = 1.0) -> WeightModel:
    return WeightModel("ewens", theta0=float(theta0))


def algebraic(beta: float = 1.0, gamma: float = 1.0) -> WeightModel:
    return WeightModel("algebraic", beta=float(beta), gamma=float(gamma))


def subexponential(beta: float = 1.0, scale: float = 1.0) -> WeightModel:
    return WeightModel("subexp", beta=float(beta), scale=float(scale))


def explicit(theta, radius: float = 1.0, tail: PowerTail | None = None,
             n_series: int = DEFAULT_N_SERIES) -> WeightModel:
    return WeightModel("explicit", theta=tuple(float(t) for t in theta), radius=float(radius),
                       tail=tail, n_series=int(n_series))


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

_DESCRIPTOR_KEYS = {
    "ewens": {"kind", "theta"},
    "algebraic": {"kind", "beta", "gamma"},
    "subexp": {"kind", "beta", "scale"},
    "explicit": {"kind", "theta", "radius", "tail", "n_series"},
}


def from_descriptor(desc: dict[str, Any] | str) -> WeightModel:
    """Build a model from its JSON descriptor (dict, JSON text or file path)."""
    if isinstance(desc, str):
        text = desc.strip()
        if not text.startswith("{"):
            text = Path(text).read_text()
        desc = json.loads(text)
    desc = dict(desc)
    kind = desc.get("kind")
    if kind == "subexponential":
        kind = "subexp"
    if kind not in _DESCRIPTOR_KEYS:
        raise ValueError(f"unknown model kind {kind!r}")
    extra = set(desc) - _DESCRIPTOR_KEYS[kind]
    if extra:
        raise ValueError(f"unknown fields for {kind} model: {sorted(extra)}")
    if kind == "ewens":
        return ewens(desc.get("theta", 1.0))
    if kind == "algebraic":
        return algebraic(desc.get("beta", 1.0), desc.get("gamma", 1.0))
    if kind == "subexp":
        return subexponential(desc.get("beta", 1.0), desc.get("scale", 1.0))
    tail = desc.get("tail")
    if tail is not None:
        unknown = set(tail) - {"coef", "exponent"}
        if unknown:
            raise ValueError(f"unknown tail fields: {sorted(unknown)}")
        tail = PowerTail(float(tail.get("coef", 1.0)), float(tail.get("exponent", 0.0)))
    return explicit(desc["theta"], radius=desc.get("radius", 1.0), tail=tail,
                    n_series=desc.get("n_series", DEFAULT_N_SERIES))


def to_descriptor(model: WeightModel) -> dict[str, Any]:
    if model.kind == "ewens":
        return {"kind": "ewens", "theta": model.theta0}
    if model.kind == "algebraic":
        return {"kind": "algebraic", "beta": model.beta, "gamma": model.gamma}
    if model.kind == "subexp":
        d = {"kind": "subexp", "beta": model.beta}
        if model.scale != 1.0:
            d["scale"] = model.scale
        return d
    d = {"kind": "explicit", "theta": list(model.theta), "radius": model.radius}
    if model.tail is not None:
        d["tail"] = {"coef": model.tail.coef, "exponent": model.tail.exponent}
        d["n_series"] = model.n_series
    return d


# ---------------------------------------------------------------------------
# weights theta_k
# ---------------------------------------------------------------------------


def log_theta(model: WeightModel, N: int) -> np.ndarray:
    """log theta_k for k = 0..N (entry 0 is -inf; zero weights are -inf)."""
    N = int(N)
    key = ("log_theta", N)
    cached = model._cache.get(key)
    if cached is not None:
        return cached
    big = max((key[1] for key in model._cache if isinstance(key, tuple) and key[0] == "log_theta" and key[1] >= N),
              default=None)
    if big is not None:
        out = model._cache[("log_theta", big)][: N + 1].copy()
    else:
        out = _compute_log_theta(model, N)
    out.setflags(write=False)
    model._cache[key] = out
    return out


def _compute_log_theta(model: WeightModel, N: int) -> np.ndarray:
    out = np.full(N + 1, -np.inf)
    if N == 0:
        return out
    k = np.arange(1, N + 1, dtype=np.float64)
    if model.kind == "ewens":
        out[1:] = math.log(model.theta0)
    elif model.kind == "algebraic":
        # theta_k = gamma * k * binom(k + beta - 1, k)
        out[1:] = math.log(model.gamma) + np.log(k) + np.cumsum(np.log1p((model.beta - 1.0) / k))
    elif model.kind == "subexp":
        out[1:] = math.log(model.scale) + np.log(k) + _log_exp_series(model.beta, N)[1:]
    else:
        L = len(model.theta)
        m = min(L, N)
        with np.errstate(divide="ignore"):
            out[1 : m + 1] = np.log(np.asarray(model.theta[:m], dtype=np.float64))
        if model.tail is not None and N > L:
            out[L + 1 :] = model.tail.log_theta(k[L:], model.radius)
    return out


def _log_exp_series(beta: float, N: int) -> np.ndarray:
    """log [t^k] exp((1 - t)^(-beta)) for k = 0..N."""
    k = np.arange(1, N + 1, dtype=np.float64)
    log_u = np.concatenate(([0.0], np.cumsum(np.log1p((beta - 1.0) / k))))
    log_w = log_u + np.log(np.concatenate(([1.0], k)))
    log_w[0] = -np.inf
    return log_power_recurrence(log_w, 1.0, N)


def theta(model: WeightModel, N: int) -> np.ndarray:
    return np.exp(log_theta(model, N))


def tilt(model: WeightModel, s: float) -> WeightModel:
    """Model with every theta_k multiplied by exp(-s); g becomes exp(-s) g."""
    if s == 0:
        return model
    f = math.exp(-s)
    if model.kind == "ewens":
        return replace(model, theta0=model.theta0 * f, _cache={})
    if model.kind == "algebraic":
        return replace(model, gamma=model.gamma * f, _cache={})
    if model.kind == "subexp":
        return replace(model, scale=model.scale * f, _cache={})
    tail = None if model.tail is None else replace(model.tail, coef=model.tail.coef * f)
    return replace(model, theta=tuple(t * f for t in model.theta), tail=tail, _cache={})


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _gap(model: WeightModel, z, gap):
    return model.radius - z if gap is None else gap


def _check_domain(model: WeightModel, z) -> None:
    if np.any(np.abs(z) >= model.radius):
        raise DomainError(f"|t| must be < {model.radius}")


def _explicit_coeffs(model: WeightModel) -> np.ndarray:
    c = model._cache.get("coeffs")
    if c is None:
        N = model.truncation
        c = theta(model, N)
        c.setflags(write=False)
        model._cache["coeffs"] = c
    return c


def _explicit_derivs(model: WeightModel, z, shift: float, block: int = 256):
    th = _explicit_coeffs(model)[1:]
    N = th.size
    z = np.asarray(z)
    flat = np.atleast_1d(z).ravel()
    k = np.arange(1, N + 1, dtype=np.float64)
    cplx = np.iscomplexobj(flat) or bool(np.any(flat < 0))
    out = [np.zeros(flat.shape, dtype=np.result_type(flat, float)) for _ in range(4)]
    cfs = np.stack((th / k, th, th * (k - 1.0), th * (k - 1.0) * (k - 2.0)))
    # near 0 the leading Taylor terms are exact to rounding and avoid 0/0 below
    tiny = np.abs(flat) < 1e-30
    if np.any(tiny):
        t = np.zeros(4)
        t[: min(N, 3)] = th[:3]
        zt = flat[tiny]
        f = math.exp(-shift)
        out[0][tiny] = f * (t[0] * zt + t[1] * zt**2 / 2)
        out[1][tiny] = f * (t[0] + t[1] * zt)
        out[2][tiny] = f * (t[1] + 2 * t[2] * zt)
        out[3][tiny] = f * 2 * t[2]
    nz = np.flatnonzero(~tiny)
    for b0 in range(0, nz.size, block):
        idx = nz[b0 : b0 + block]
        zi = flat[idx]
        # powers z^k via exp/log keeps large N stable
        lz = np.log(zi.astype(complex)) if cplx else np.log(zi)
        zk = np.exp(np.outer(lz, k) - shift)
        sums = zk @ cfs.T
        if not np.iscomplexobj(flat):
            sums = sums.real
        for d in range(4):
            out[d][idx] = sums[:, d] / zi**d
    return tuple(o.reshape(z.shape) if z.ndim else o[0] for o in out)


def derivs(model: WeightModel, z, gap=None, shift: float = 0.0):
    """(g, g', g'', g''') at z, each multiplied by exp(-shift).

    ``gap`` is rho - z supplied exactly by callers working near rho; ``shift``
    lets callers rescale values that would otherwise overflow.
    """
    w = _gap(model, z, gap)
    if model.kind == "explicit":
        return _explicit_derivs(model, z, shift)
    f = math.exp(-shift) if shift else 1.0
    if model.kind == "ewens":
        c = model.theta0 * f
        return (-c * np.log(w), c / w, c / w**2, 2.0 * c / w**3)
    if model.kind == "algebraic":
        b = model.beta
        c = model.gamma * f
        return (c * w**-b, c * b * w ** (-b - 1), c * b * (b + 1) * w ** (-b - 2),
                c * b * (b + 1) * (b + 2) * w ** (-b - 3))
    b = model.beta
    u = w**-b
    u1 = b * w ** (-b - 1)
    u2 = b * (b + 1) * w ** (-b - 2)
    u3 = b * (b + 1) * (b + 2) * w ** (-b - 3)
    g = np.exp(u + math.log(model.scale) - shift)
    return (g, g * u1, g * (u2 + u1 * u1), g * (u3 + 3.0 * u1 * u2 + u1**3))


def euler_derivs(model: WeightModel, z, gap=None, shift: float = 0.0):
    """(g, Dg, D^2 g, D^3 g) with D = z d/dz, times exp(-shift).

    At real r these are g, a(r), b(r) and the cubic remainder scale.
    """
    g, g1, g2, g3 = derivs(model, z, gap, shift)
    zg1 = z * g1
    z2g2 = z * z * g2
    return g, zg1, zg1 + z2g2, zg1 + 3.0 * z2g2 + z**3 * g3


def eval_g(model: WeightModel, t):
    """g(t) for real or complex |t| < rho.

    Raises ``DomainError`` outside the disc and ``OverflowError`` when a real
    value exceeds the float range (use :func:`log_g` instead).
    """
    _check_domain(model, t)
    with np.errstate(over="ignore"):
        val = derivs(model, t)[0]
    if np.any(np.isinf(val)):
        raise OverflowError("g(t) overflows; use log_g for real arguments")
    return val


def log_g(model: WeightModel, r: float, gap: float | None = None) -> float:
    """log g(r) for real 0 <= r < rho, finite even when g overflows."""
    w = _gap(model, r, gap)
    if not (0 <= r < model.radius) or w <= 0:
        raise DomainError(f"r must lie in [0, {model.radius})")
    if model.kind == "subexp":
        return math.log(model.scale) + w**-model.beta
    if model.kind == "algebraic":
        return math.log(model.gamma) - model.beta * math.log(w)
    if model.kind == "ewens":
        v = -model.theta0 * math.log(w)
        return math.log(v) if v > 0 else -math.inf
    if r == 0:
        return -math.inf
    lt = log_theta(model, model.truncation)[1:]
    k = np.arange(1, lt.size + 1)
    return float(logsumexp(lt - np.log(k) + k * math.log(r)))


def eval_derivs(model: WeightModel, r: float, gap: float | None = None):
    if not (0 <= r < model.radius):
        raise DomainError(f"r must lie in [0, {model.radius})")
    return tuple(float(v) for v in derivs(model, r, gap))


def a_of(model: WeightModel, r: float, gap: float | None = None) -> float:
    """a(r) = r g'(r)."""
    _, g1, _, _ = eval_derivs(model, r, gap)
    return r * g1


def b_of(model: WeightModel, r: float, gap: float | None = None) -> float:
    """b(r) = r g'(r) + r^2 g''(r)."""
    _, g1, g2, _ = eval_derivs(model, r, gap)
    return r * g1 + r * r * g2


def remainder_scale(model: WeightModel, r: float, gap: float | None = None) -> float:
    """r g' + 3 r^2 g'' + r^3 g''', the size of the cubic Taylor term of g(r e^{i phi})."""
    _, g1, g2, g3 = eval_derivs(model, r, gap)
    return r * g1 + 3 * r * r * g2 + r**3 * g3


def log_a(model: WeightModel, r: float, gap: float | None = None) -> float:
    """log a(r), stable for r near rho and for overflowing g."""
    w = _gap(model, r, gap)
    if r <= 0:
        return -math.inf
    lr = math.log(r)
    if model.kind == "ewens":
        return math.log(model.theta0) + lr - math.log(w)
    if model.kind == "algebraic":
        return math.log(model.gamma * model.beta) + lr - (model.beta + 1) * math.log(w)
    if model.kind == "subexp":
        b = model.beta
        return math.log(model.scale * b) + lr - (b + 1) * math.log(w) + w**-b
    lt = log_theta(model, model.truncation)[1:]
    k = np.arange(1, lt.size + 1)
    return float(logsumexp(lt + k * lr))


def b_over_a(model: WeightModel, r: float, gap: float | None = None) -> float:
    """b(r) / a(r) = 1 + r g''(r) / g'(r) = d log a / d log r."""
    w = _gap(model, r, gap)
    if model.kind == "ewens":
        return 1.0 + r / w
    if model.kind == "algebraic":
        return 1.0 + r * (model.beta + 1) / w
    if model.kind == "subexp":
        b = model.beta
        return 1.0 + r * ((b + 1) / w + b * w ** (-b - 1))
    if r == 0:
        lt = log_theta(model, model.truncation)[1:]
        return float(np.argmax(lt > -np.inf) + 1)
    lt = log_theta(model, model.truncation)[1:]
    k = np.arange(1, lt.size + 1)
    lw = lt + k * math.log(r)
    return float(np.exp(logsumexp(lw, b=k) - logsumexp(lw)))


def log_b(model: WeightModel, r: float, gap: float | None = None) -> float:
    return log_a(model, r, gap) + math.log(b_over_a(model, r, gap))


def log_shift(model: WeightModel, r: float, gap: float | None = None) -> float:
    """Natural rescaling exponent at radius r: log g(r) for the overflowing family, else 0."""
    if model.kind == "subexp":
        return log_g(model, r, gap)
    return 0.0


def tail_bound(model: WeightModel, r: float) -> float:
    """Bound on the series terms beyond the truncation order at real r.

    Without a tail rule this is theta_max x^N / (N (1 - x)) with x = r / rho,
    the error incurred if the listed weights continued at most at theta_max.
    With a power tail the geometric ratio bound of the actual tail is used.
    Parametric families are evaluated in closed form and return 0.
    """
    if model.kind != "explicit":
        return 0.0
    x = abs(r) / model.radius
    N = model.truncation
    if N == 0 or x == 0:
        return 0.0
    if x >= 1:
        return math.inf
    if model.tail is None:
        tmax = max(model.theta) if model.theta else 0.0
        return tmax * x**N / (N * (1 - x))
    t = model.tail
    if t.coef == 0:
        return 0.0
    first = t.coef * (N + 1) ** (t.exponent - 1) * x ** (N + 1)
    q = x * max(1.0, ((N + 2) / (N + 1)) ** (t.exponent - 1))
    return first / (1 - q) if q < 1 else math.inf


def eval_g_with_bound(model: WeightModel, r: float) -> tuple[float, float]:
    """(g(r), truncation tail bound) for real r."""
    return float(eval_g(model, r)), tail_bound(model, r)


def known_log_admissible(model: WeightModel) -> bool | None:
    """Cheap classification: True/False for families with a known verdict, None otherwise."""
    if model.kind in ("algebraic", "subexp"):
        return True
    if model.kind == "ewens":
        return False
    if model.tail is None:
        return False  # polynomial g: a(r) stays bounded
    return None
