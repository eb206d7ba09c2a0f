"""Analytic one-dimensional density models and power-of-density weights.

Every model exposes a log-density (so that weights ``f**-beta`` can be
formed without underflow), a closed-form CDF and survival function, an
inverse-CDF sampler and the exact law of the level variable ``log f(X)``.
The last one gives the weight tail ``Pr{Psi(X) > u}`` in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "DensityModel",
    "ExpTail",
    "SymExponential",
    "PowerTail",
    "DoubleLog",
    "ZeroAtOrigin",
    "Normal",
    "WeightSpec",
    "make_density",
    "pdf",
    "log_pdf",
    "sample",
    "weight_tail",
    "log_weight_tail",
    "weighted_norms",
]

_TINY_U = 2.0 ** -54


def _scalarize(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _log_upper_gamma_reg(s: float, y: np.ndarray) -> np.ndarray:
    """log of the regularized upper incomplete gamma Q(s, y), y > 0."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        direct = np.log(special.gammaincc(s, y))
    big = y > 500.0
    if np.any(big):
        yb = y[big] if y.ndim else y
        # Q(s,y) ~ y^(s-1) e^-y / Gamma(s) * (1 + (s-1)/y + (s-1)(s-2)/y^2 + ...)
        series = 1.0 + (s - 1.0) / yb + (s - 1.0) * (s - 2.0) / yb**2 \
            + (s - 1.0) * (s - 2.0) * (s - 3.0) / yb**3
        asym = (s - 1.0) * np.log(yb) - yb - special.gammaln(s) + np.log(series)
        if y.ndim:
            direct = direct.copy()
            direct[big] = asym
        else:
            direct = asym
    return direct


def _log_exp1(y: np.ndarray) -> np.ndarray:
    """log E1(y) for y > 0 without underflow."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        direct = np.log(special.exp1(y))
    big = y > 500.0
    if np.any(big):
        yb = y[big] if y.ndim else y
        asym = -yb - np.log(yb) + np.log1p(-1.0 / yb + 2.0 / yb**2 - 6.0 / yb**3)
        if y.ndim:
            direct = direct.copy()
            direct[big] = asym
        else:
            direct = asym
    return direct


def _bisect(fun, lo, hi, tol=1e-12, max_iter=200):
    """Vectorized bisection for increasing ``fun`` with fun(lo) <= 0 <= fun(hi)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pos = fun(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DensityModel:
    """Common interface.  Subclasses fill in the closed forms.

    ``satisfies_regularity`` records whether the model meets the local
    ratio conditions (boundedness, continuity on the positivity set and
    the two ratio-smoothness conditions) under which the tail criteria
    govern the weighted statistic.
    """

    family: str = field(init=False, default="abstract")
    dimension: int = field(init=False, default=1)

    # interface -----------------------------------------------------------
    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    @property
    def support(self) -> list[tuple[float, float]]:
        return [(-math.inf, math.inf)]

    @property
    def satisfies_regularity(self) -> bool:
        return True

    @property
    def full_support(self) -> bool:
        return self.support == [(-math.inf, math.inf)]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density is not smooth (for quadrature splits)."""
        return ()

    @property
    def center(self) -> float:
        return 0.0

    def log_pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def log_level_prob(self, ell):
        """log Pr{log f(X) < ell}, vectorized in ``ell``."""
        raise NotImplementedError

    def core_interval(self, frac: float = 1e-3) -> tuple[float, float]:
        """Interval on which f >= frac * sup f."""
        raise NotImplementedError

    # shared --------------------------------------------------------------
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, np.exp(self.log_pdf(x)))

    def __call__(self, x):
        return self.pdf(x)

    def interval_prob(self, a, b):
        """Pr{a <= X <= b}, computed on the side that avoids cancellation."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        right = a >= self.center
        with np.errstate(invalid="ignore"):
            out = np.where(right, self.sf(a) - self.sf(b), self.cdf(b) - self.cdf(a))
        return _scalarize(a, np.clip(out, 0.0, 1.0))

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF draws; ``rng`` is a per-worker stream."""
        u = rng.random(size)
        u = np.where(u == 0.0, _TINY_U, u)
        return self.quantile(u)

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.log_pdf(x) > -np.inf


@dataclass(frozen=True)
class ExpTail(DensityModel):
    """f(x) = c exp(-c2 |x|^r) with c fixed by normalization."""

    c2: float = 1.0
    r: float = 1.0
    family: str = field(init=False, default="exp_tail")

    def __post_init__(self):
        if self.c2 <= 0 or self.r <= 0:
            raise ValueError("exp_tail needs c2 > 0 and r > 0")

    @property
    def c(self) -> float:
        return self.c2 ** (1.0 / self.r) * self.r / (2.0 * math.gamma(1.0 / self.r))

    @property
    def sup_norm(self) -> float:
        return self.c

    @property
    def breakpoints(self):
        return (0.0,) if self.r <= 1.0 else ()

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, math.log(self.c) - self.c2 * np.abs(x) ** self.r)

    def _abs_sf(self, x):
        return special.gammaincc(1.0 / self.r, self.c2 * np.abs(x) ** self.r)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * self._abs_sf(x)
        return _scalarize(x, np.where(x < 0, half, 1.0 - half))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * self._abs_sf(x)
        return _scalarize(x, np.where(x > 0, half, 1.0 - half))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        q = 2.0 * np.minimum(p, 1.0 - p)
        g = special.gammainccinv(1.0 / self.r, q)
        mag = (g / self.c2) ** (1.0 / self.r)
        return _scalarize(p, np.where(p < 0.5, -mag, mag))

    def log_level_prob(self, ell):
        ell = np.asarray(ell, dtype=float)
        y = math.log(self.c) - ell
        pos = y > 0
        out = np.zeros_like(y)
        if np.any(pos):
            out[pos] = _log_upper_gamma_reg(1.0 / self.r, y[pos])
        return _scalarize(ell, out)

    def core_interval(self, frac=1e-3):
        a = (math.log(1.0 / frac) / self.c2) ** (1.0 / self.r)
        return (-a, a)


@dataclass(frozen=True)
class SymExponential(ExpTail):
    """f(x) = exp(-|x|) / 2."""

    family: str = field(init=False, default="sym_exponential")

    def __init__(self):
        object.__setattr__(self, "c2", 1.0)
        object.__setattr__(self, "r", 1.0)

    @property
    def c(self) -> float:
        return 0.5

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, -math.log(2.0) - np.abs(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * np.exp(-np.abs(x))
        return _scalarize(x, np.where(x < 0, half, 1.0 - half))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * np.exp(-np.abs(x))
        return _scalarize(x, np.where(x > 0, half, 1.0 - half))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(p < 0.5, np.log(2.0 * p), -np.log(2.0 * (1.0 - p)))
        return _scalarize(p, out)

    def interval_prob(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        # one-signed windows: e^{-near}(1 - e^{-(b-a)}) / 2
        near = np.where(a >= 0, a, np.where(b <= 0, -b, 0.0))
        one_sided = 0.5 * np.exp(-near) * -np.expm1(-(b - a))
        straddle = 1.0 - 0.5 * np.exp(-np.abs(a)) - 0.5 * np.exp(-np.abs(b))
        out = np.where((a >= 0) | (b <= 0), one_sided, straddle)
        return _scalarize(a, np.clip(out, 0.0, 1.0))

    def log_level_prob(self, ell):
        # Pr{f(X) < v} = min(1, 2v)
        ell = np.asarray(ell, dtype=float)
        return _scalarize(ell, np.minimum(0.0, math.log(2.0) + ell))

    def core_interval(self, frac=1e-3):
        a = math.log(1.0 / frac)
        return (-a, a)


@dataclass(frozen=True)
class Normal(DensityModel):
    mu: float = 0.0
    sigma: float = 1.0
    family: str = field(init=False, default="normal")

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("normal needs sigma > 0")

    @property
    def sup_norm(self):
        return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))

    @property
    def center(self):
        return self.mu

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        return _scalarize(x, math.log(self.sup_norm) - 0.5 * z * z)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, special.ndtr((x - self.mu) / self.sigma))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, special.ndtr((self.mu - x) / self.sigma))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return _scalarize(p, self.mu + self.sigma * special.ndtri(p))

    def log_level_prob(self, ell):
        # Pr{|Z| > sqrt(2y)} with y = log(sup f) - ell
        ell = np.asarray(ell, dtype=float)
        y = np.maximum(math.log(self.sup_norm) - ell, 0.0)
        out = math.log(2.0) + special.log_ndtr(-np.sqrt(2.0 * y))
        return _scalarize(ell, np.minimum(out, 0.0))

    def core_interval(self, frac=1e-3):
        a = self.sigma * math.sqrt(2.0 * math.log(1.0 / frac))
        return (self.mu - a, self.mu + a)


@dataclass(frozen=True)
class PowerTail(DensityModel):
    """f(x) = c (1 + |x|)^-r, a bounded continuous density with c/|x|^r tails."""

    r: float = 3.0
    family: str = field(init=False, default="power_tail")

    def __post_init__(self):
        if self.r <= 1:
            raise ValueError("power_tail needs r > 1")

    @property
    def c(self):
        return 0.5 * (self.r - 1.0)

    @property
    def sup_norm(self):
        return self.c

    @property
    def breakpoints(self):
        return (0.0,)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, math.log(self.c) - self.r * np.log1p(np.abs(x)))

    def _abs_sf(self, x):
        return (1.0 + np.abs(x)) ** (1.0 - self.r)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * self._abs_sf(x)
        return _scalarize(x, np.where(x < 0, half, 1.0 - half))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * self._abs_sf(x)
        return _scalarize(x, np.where(x > 0, half, 1.0 - half))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        q = 2.0 * np.minimum(p, 1.0 - p)
        with np.errstate(divide="ignore"):
            mag = q ** (-1.0 / (self.r - 1.0)) - 1.0
        return _scalarize(p, np.where(p < 0.5, -mag, mag))

    def log_level_prob(self, ell):
        ell = np.asarray(ell, dtype=float)
        y = math.log(self.c) - ell
        out = np.minimum(0.0, -(self.r - 1.0) / self.r * y)
        return _scalarize(ell, out)

    def core_interval(self, frac=1e-3):
        a = frac ** (-1.0 / self.r) - 1.0
        return (-a, a)


@dataclass(frozen=True)
class DoubleLog(DensityModel):
    """f(t) = c exp(-e^t) on t >= 0.  Violates the local ratio conditions."""

    family: str = field(init=False, default="double_log")

    @property
    def c(self):
        return 1.0 / float(special.exp1(1.0))

    @property
    def sup_norm(self):
        return self.c / math.e

    @property
    def support(self):
        return [(0.0, math.inf)]

    @property
    def satisfies_regularity(self):
        return False

    @property
    def breakpoints(self):
        return (0.0,)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            val = math.log(self.c) - np.exp(x)
        return _scalarize(x, np.where(x >= 0, val, -np.inf))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            val = self.c * special.exp1(np.exp(np.maximum(x, 0.0)))
        return _scalarize(x, np.where(x >= 0, val, 1.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, 1.0 - self.sf(x))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        target = np.log1p(-p)

        def fun(x):
            return target - (math.log(self.c) + _log_exp1(np.exp(x)))

        return _scalarize(p, _bisect(fun, np.zeros_like(p), np.full_like(p, 8.0)))

    def log_level_prob(self, ell):
        ell = np.asarray(ell, dtype=float)
        y = math.log(self.c) - ell
        out = np.zeros_like(y)
        big = y > 1.0
        if np.any(big):
            out[big] = np.minimum(0.0, math.log(self.c) + _log_exp1(y[big]))
        return _scalarize(ell, out)

    def core_interval(self, frac=1e-3):
        return (0.0, math.log(1.0 + math.log(1.0 / frac)))


@dataclass(frozen=True)
class ZeroAtOrigin(DensityModel):
    """f(t) = c |t|^s on |t| <= a, with an isolated zero at the origin."""

    s: float = 2.0
    a: float = 1.0
    family: str = field(init=False, default="zero_at_origin")

    def __post_init__(self):
        if self.s <= 0 or self.a <= 0:
            raise ValueError("zero_at_origin needs s > 0 and a > 0")

    @property
    def c(self):
        return (self.s + 1.0) / (2.0 * self.a ** (self.s + 1.0))

    @property
    def sup_norm(self):
        return self.c * self.a**self.s

    @property
    def support(self):
        return [(-self.a, 0.0), (0.0, self.a)]

    @property
    def full_support(self):
        return False

    @property
    def satisfies_regularity(self):
        return False

    @property
    def breakpoints(self):
        return (-self.a, 0.0, self.a)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            val = math.log(self.c) + self.s * np.log(ax)
        return _scalarize(x, np.where(ax <= self.a, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        frac = np.minimum(np.abs(x) / self.a, 1.0) ** (self.s + 1.0)
        return _scalarize(x, np.where(x < 0, 0.5 * (1.0 - frac), 0.5 * (1.0 + frac)))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalarize(x, 1.0 - self.cdf(x))

    def _mass_from_origin(self, x):
        # signed Pr{0 <= X <= x}; no cancellation near the zero of f
        return np.sign(x) * 0.5 * np.minimum(np.abs(x) / self.a, 1.0) ** (self.s + 1.0)

    def interval_prob(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = self._mass_from_origin(b) - self._mass_from_origin(a)
        return _scalarize(a, np.clip(out, 0.0, 1.0))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        mag = self.a * np.abs(2.0 * p - 1.0) ** (1.0 / (self.s + 1.0))
        return _scalarize(p, np.where(p < 0.5, -mag, mag))

    def log_level_prob(self, ell):
        # |X| < tau with tau = ((v/c))^(1/s)
        ell = np.asarray(ell, dtype=float)
        log_tau = (ell - math.log(self.c)) / self.s
        out = np.minimum(0.0, (self.s + 1.0) * (log_tau - math.log(self.a)))
        return _scalarize(ell, out)

    def core_interval(self, frac=1e-3):
        return (-self.a, self.a)


_FAMILIES = {
    "exp_tail": ExpTail,
    "sym_exponential": SymExponential,
    "normal": Normal,
    "power_tail": PowerTail,
    "double_log": DoubleLog,
    "zero_at_origin": ZeroAtOrigin,
}


def make_density(family: str, **params) -> DensityModel:
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown density family {family!r}; choose from {sorted(_FAMILIES)}"
        ) from None
    return cls(**params)


@dataclass(frozen=True)
class WeightSpec:
    """Weight Psi = scale * f**(-beta) on the positivity set.

    ``beta = 0`` is the unweighted statistic.  ``scale`` exists for the
    homogeneity checks; built-in scenarios keep it at 1.
    """

    beta: float
    scale: float = 1.0
    mode: str = "power_of_density"

    def __post_init__(self):
        if not 0.0 <= self.beta <= 2.0:
            raise ValueError("beta must lie in [0, 2]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.mode != "power_of_density":
            raise ValueError("only power_of_density weights are supported")

    def log_psi(self, m: DensityModel, t):
        lf = m.log_pdf(t)
        if self.beta == 0.0:
            return np.where(np.asarray(lf) > -np.inf, math.log(self.scale), -np.inf)
        return math.log(self.scale) - self.beta * lf

    def psi(self, m: DensityModel, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return _scalarize(t, np.exp(self.log_psi(m, t)))


def log_pdf(m: DensityModel, x):
    return m.log_pdf(x)


def pdf(m: DensityModel, x):
    return m.pdf(x)


def sample(m: DensityModel, rng: np.random.Generator, size=None):
    return m.sample(rng, size)


def log_weight_tail(m: DensityModel, w: WeightSpec, u):
    """log Pr{Psi(X) > u} for u > 0."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u must be positive")
    log_u = np.log(u) - math.log(w.scale)
    if w.beta == 0.0:
        return _scalarize(u, np.where(log_u < 0, 0.0, -np.inf))
    # Psi > u  <=>  log f(X) < -log(u / scale) / beta
    return m.log_level_prob(-log_u / w.beta)


def weight_tail(m: DensityModel, w: WeightSpec, u):
    """Pr{Psi(X) > u}, exact per family and clamped to [0, 1]."""
    u = np.asarray(u, dtype=float)
    return _scalarize(u, np.clip(np.exp(log_weight_tail(m, w, u)), 0.0, 1.0))


def weighted_norms(m: DensityModel, w: WeightSpec) -> tuple[float, float]:
    """Return ``(sup Psi f^(1/2), sup f)``; the first is nan when beta > 1/2."""
    fs = m.sup_norm
    if w.beta > 0.5:
        return math.nan, fs
    return w.scale * fs ** (0.5 - w.beta), fs
