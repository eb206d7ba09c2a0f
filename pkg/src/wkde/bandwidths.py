"""Regularly varying bandwidth sequences and the normings built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BandSequence",
    "NormingSequence",
    "RegularVariationReport",
    "fit_power_log",
    "h",
    "lam",
    "sup_normalizer",
    "validate_regular_variation",
    "validate_norming",
]

T_MIN = 2.0


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < T_MIN):
        raise ValueError(f"bandwidth sequences are defined for t >= {T_MIN}")
    return t


@dataclass(frozen=True)
class BandSequence:
    """Bandwidth h_t for t >= 2.

    forms
      ``power``        h_t^d = t^-alpha
      ``power_log``    h_t^d = t^-alpha (log t)^-p
      ``critical_log`` h_t = 1 / (t^(1 - 2 beta) log t), d = 1; here
                       ``alpha`` is 1 - 2 beta and ``beta`` must be given.
    """

    form: str
    alpha: float
    d: int = 1
    p: float = 0.0
    beta: float | None = None

    def __post_init__(self):
        if self.form not in ("power", "power_log", "critical_log"):
            raise ValueError(f"unknown bandwidth form {self.form!r}")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.form == "critical_log":
            if self.beta is None or not 0.0 < self.beta < 0.5:
                raise ValueError("critical_log needs beta in (0, 1/2)")
            if self.d != 1:
                raise ValueError("critical_log is one-dimensional")
            if not math.isclose(self.alpha, 1.0 - 2.0 * self.beta):
                raise ValueError("critical_log alpha must equal 1 - 2 beta")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")

    @classmethod
    def power(cls, alpha: float, d: int = 1) -> "BandSequence":
        return cls("power", alpha, d)

    @classmethod
    def power_log(cls, alpha: float, p: float, d: int = 1) -> "BandSequence":
        return cls("power_log", alpha, d, p=p)

    @classmethod
    def critical_log(cls, beta: float) -> "BandSequence":
        return cls("critical_log", 1.0 - 2.0 * beta, 1, p=1.0, beta=beta)

    def log_hd(self, t):
        """log h_t^d."""
        t = _check_t(t)
        lt = np.log(t)
        if self.form == "power":
            out = -self.alpha * lt
        else:
            out = -self.alpha * lt - self.p * np.log(lt)
        return out if out.ndim else float(out)

    def hd(self, t):
        return np.exp(self.log_hd(t))

    def __call__(self, t):
        return h(self, t)


def h(seq: BandSequence, t):
    """Bandwidth value h_t."""
    out = np.exp(np.asarray(seq.log_hd(t)) / seq.d)
    return out if np.ndim(out) else float(out)


def _abs_log_h(seq: BandSequence, t):
    log_h = np.asarray(seq.log_hd(t)) / seq.d
    if np.any(log_h >= 0):
        raise ValueError("h_t >= 1: |log h_t| is not positive, invalid regime")
    return -log_h


def lam(seq: BandSequence, t):
    """Classical norming lambda_t = sqrt(t h_t^d |log h_t|)."""
    t = _check_t(t)
    out = np.sqrt(t * seq.hd(t) * _abs_log_h(seq, t))
    return out if np.ndim(out) else float(out)


def sup_normalizer(seq: BandSequence, n):
    """sqrt(2 n h_n^d |log h_n^d|), the scale of the max-term decomposition."""
    n = _check_t(n)
    out = np.sqrt(2.0 * n * seq.hd(n) * seq.d * _abs_log_h(seq, n))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class NormingSequence:
    """Large norming d_t = scale * t^exponent * (log t)^log_power."""

    exponent: float
    log_power: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.exponent <= 0 or self.scale <= 0:
            raise ValueError("norming needs positive exponent and scale")

    @classmethod
    def from_c(cls, beta: float, log_power: float = 0.0) -> "NormingSequence":
        """d_t = c(t)^beta for c(t) = t (log t)^log_power."""
        return cls(beta, beta * log_power)

    def log_value(self, t):
        t = _check_t(t)
        out = math.log(self.scale) + self.exponent * np.log(t) \
            + self.log_power * np.log(np.log(t))
        return out if out.ndim else float(out)

    def __call__(self, t):
        out = np.exp(np.asarray(self.log_value(t)))
        return out if np.ndim(out) else float(out)


def fit_power_log(log_t, log_g, corrections: bool = False):
    """Least squares fit of log g = a + b log t + c log log t.

    Returns ``(b, c, max_abs_residual)``.  Separating the log factor keeps
    slowly varying corrections from leaking into the power exponent.  With
    ``corrections`` the terms 1/log t and log log t / log t are also fitted
    (they absorb factors such as (1 + log log t / log t)^p).
    """
    log_t = np.asarray(log_t, dtype=float)
    log_g = np.asarray(log_g, dtype=float)
    ll = np.log(log_t)
    cols = [np.ones_like(log_t), log_t, ll]
    if corrections:
        cols += [1.0 / log_t, ll / log_t]
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, log_g, rcond=None)
    resid = log_g - design @ coef
    return float(coef[1]), float(coef[2]), float(np.max(np.abs(resid)))


def _slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class RegularVariationReport:
    exponent_estimate: float
    raw_slope: float
    log_exponent: float
    residual: float
    H1_ok: bool
    H2_ok: bool
    lambda_exponent: float


def default_grid(lo: float = T_MIN, hi: float = 1e12, num: int = 10_000):
    return np.geomspace(lo, hi, num)


def validate_regular_variation(seq, t_grid=None,
                               band: float = 0.01) -> RegularVariationReport:
    """Numerical check of monotonicity and regular variation of h_t^d.

    ``raw_slope`` is the plain log-log slope over the top three decades of
    the grid; ``exponent_estimate`` is the power exponent after removing a
    log t factor, which is what the validity verdict uses.

    A :class:`NormingSequence` is checked the same way for d_t: H1 means
    strictly increasing and H2 a positive exponent.
    """
    t = default_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if math.log10(t[-1] / t[0]) < 6:
        raise ValueError("grid must span at least 6 decades")
    log_t = np.log(t)
    top = t >= t[-1] / 1e3
    if isinstance(seq, NormingSequence):
        log_d = np.asarray(seq.log_value(t))
        b, c, resid = fit_power_log(log_t[top], log_d[top])
        raw = _slope(log_t[top], log_d[top])
        inc = bool(np.all(np.diff(log_d) > 0))
        return RegularVariationReport(b, raw, c, resid, inc, bool(b > band and resid < 0.05),
                                      math.nan)
    log_hd = np.asarray(seq.log_hd(t))

    raw = _slope(log_t[top], log_hd[top])
    b, c, resid = fit_power_log(log_t[top], log_hd[top])

    h_dec = np.all(np.diff(log_hd) < 0)
    nh_inc = np.all(np.diff(log_t + log_hd) > 0)
    H1 = bool(h_dec and nh_inc)
    H2 = bool(-1.0 + band < b < -band and resid < 0.05)

    try:
        lam_t = np.log(lam(seq, t))
        lam_exp = _slope(log_t[top], lam_t[top])
    except ValueError:
        lam_exp = math.nan
    return RegularVariationReport(b, raw, c, resid, H1, H2, lam_exp)


def validate_norming(dseq: NormingSequence, seq: BandSequence, beta: float,
                     t_grid=None) -> dict:
    """Grid checks of the large-norming hypotheses.

    d_t strictly increasing, d_t / lambda_t increasing without bound and
    d_t >= C t^beta for some C > 0 (the ratio d_t / t^beta must not decay).
    """
    t = default_grid(1e2, 1e16, 400) if t_grid is None else np.asarray(t_grid)
    log_t = np.log(t)
    log_d = np.asarray(dseq.log_value(t))
    log_ratio_lam = log_d - np.log(lam(seq, t))
    log_ratio_pow = log_d - beta * log_t
    increasing = bool(np.all(np.diff(log_d) > 0))
    lam_b, lam_c, _ = fit_power_log(log_t, log_ratio_lam)
    lam_ok = bool(lam_b > 1e-9 or (abs(lam_b) <= 1e-9 and lam_c > 1e-9))
    pow_b, pow_c, _ = fit_power_log(log_t, log_ratio_pow)
    pow_ok = bool(pow_b > 1e-9 or (abs(pow_b) <= 1e-9 and pow_c >= -1e-9))
    return {
        "increasing": increasing,
        "dominates_lambda": lam_ok,
        "lower_power_bound": pow_ok,
        "ratio_to_lambda_exponent": lam_b,
        "ok": increasing and lam_ok and pow_ok,
    }
