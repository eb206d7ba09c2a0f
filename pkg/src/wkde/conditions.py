"""Tail and integral conditions, and the predicted asymptotic regime.

Limit statements are judged on finite log grids.  A trace
``g(t) = t Pr{Psi(X) > N_t}`` (or the integrand ``Pr{Psi(X) > N_t}``) is
fitted as ``a + b log t + c log log t`` on its top decades; the power
exponent ``b`` decides unless it sits inside a small band around the
critical value.  Inside the band both exponents are refitted far out
(t up to 1e300, everything in log space) where slowly vanishing
corrections such as log log t / log t are negligible, and the log
exponent ``c`` decides.  All built-in weight tails are exact closed forms,
so the fits see no noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .bandwidths import (
    BandSequence,
    NormingSequence,
    fit_power_log,
    lam,
    validate_norming,
)
from .densities import DensityModel, SymExponential, ExpTail, WeightSpec, log_weight_tail
from .kernels import KernelSpec

__all__ = [
    "LimitLaw",
    "TailTrace",
    "IntegralTest",
    "RegimePrediction",
    "tail_condition_trace",
    "check_tightness_classical",
    "check_tightness_large",
    "integral_test",
    "classify_regime",
]

SCAN_GRID = np.geomspace(1e2, 1e16, 561)
INTEGRAL_HORIZON = 1e12
POWER_BAND = 0.005      # |b| below this defers to the log exponent
INTEGRAL_BAND = 0.02    # |b + 1| below this defers to the log exponent
LOG_BAND = 0.05
GROWTH_CAP = 1e3
# far window used to settle the log exponent when the power exponent is
# critical; slowly vanishing corrections are negligible out there
FAR_GRID = np.geomspace(1e100, 1e300, 400)
FAR_POWER_TOL = 1e-4    # far-window fits of exact tails are this accurate in b
HARMONIC_LOG_TOL = 1e-3


@dataclass(frozen=True)
class LimitLaw:
    """Law of ``max(scale * Z**beta, constant)`` with Pr{Z <= t} = exp(-2/t).

    ``kind == "constant"`` is the degenerate law at ``constant``.
    """

    kind: str
    beta: float = 1.0
    scale: float = 1.0
    constant: float = 0.0
    kappa: float = math.nan
    l2_norm: float = math.nan

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = (x >= self.constant).astype(float)
        else:
            z = np.where(x > 0, (np.maximum(x, 0) / self.scale) ** (1.0 / self.beta), 0.0)
            with np.errstate(divide="ignore"):
                fz = np.where(z > 0, np.exp(-2.0 / np.where(z > 0, z, 1.0)), 0.0)
            out = np.where(x >= self.constant, fz, 0.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "constant":
            out = np.full(p.shape, self.constant)
        else:
            z = -2.0 / np.log(p)
            out = np.maximum(self.scale * z**self.beta, self.constant)
        return float(out) if out.ndim == 0 else out

    @staticmethod
    def z_cdf(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t > 0, np.exp(-2.0 / np.where(t > 0, t, 1.0)), 0.0)

    @staticmethod
    def z_quantile(p):
        return -2.0 / np.log(np.asarray(p, dtype=float))


@dataclass
class TailTrace:
    t: np.ndarray
    log_g: np.ndarray
    power_exponent: float
    log_exponent: float
    growth: float
    verdict: str

    @property
    def g(self):
        return np.exp(self.log_g)


@dataclass
class IntegralTest:
    verdict: str
    partial_integral: float
    power_exponent: float
    log_exponent: float
    horizon: float = INTEGRAL_HORIZON


@dataclass
class RegimePrediction:
    norming_kind: str
    tightness: str
    as_behavior: str
    limit_constant: float | None = None
    limit_law: LimitLaw | None = None
    evidence: dict = field(default_factory=dict)
    reason: str = ""

    def __post_init__(self):
        if self.as_behavior == "converges_to_constant" and self.tightness != "bounded":
            raise ValueError("a.s. constant limit requires a bounded regime")


def _norming_fn(norming) -> Callable:
    if isinstance(norming, BandSequence):
        return lambda t: lam(norming, t)
    if isinstance(norming, NormingSequence):
        return norming
    if callable(norming):
        return norming
    raise TypeError("norming must be a BandSequence, NormingSequence or callable")


def _valid_start(fn) -> float:
    for t in np.geomspace(2.0, 1e6, 241):
        try:
            fn(float(t))
        except ValueError:
            continue
        return float(t)
    raise ValueError("norming undefined on [2, 1e6]")


def _fit_top(t, log_y, decades):
    top = t >= t[-1] / 10.0**decades
    finite = np.isfinite(log_y) & top
    if finite.sum() < 4:
        return -math.inf, -math.inf, 0.0
    return fit_power_log(np.log(t[finite]), log_y[finite], corrections=True)


def _far_fit(log_y_fn):
    """(b, c, resid) refitted on ``FAR_GRID``; None if the trace is not finite there."""
    with np.errstate(all="ignore"):
        log_y = np.asarray(log_y_fn(FAR_GRID), dtype=float)
    if not np.all(np.isfinite(log_y)):
        return None
    return fit_power_log(np.log(FAR_GRID), log_y, corrections=True)


def tail_condition_trace(m: DensityModel, w: WeightSpec, norming, t_grid=None,
                         decades: float = 6.0) -> TailTrace:
    """Evaluate g(t) = t Pr{Psi(X) > N_t} and classify limsup g < inf.

    No applicability checks are made here; this is the raw tail evaluator.
    """
    t = SCAN_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    N = np.asarray(_norming_fn(norming)(t), dtype=float)
    log_g = np.log(t) + np.asarray(log_weight_tail(m, w, N))
    b, c, _ = _fit_top(t, log_g, decades)
    if abs(b) <= POWER_BAND and t_grid is None:
        far = _far_fit(lambda u: np.log(u) + np.asarray(
            log_weight_tail(m, w, np.asarray(_norming_fn(norming)(u)))))
        if far is not None:
            b, c = (0.0 if abs(far[0]) <= FAR_POWER_TOL else far[0]), far[1]
    g0 = log_g[0]
    growth = float(np.max(log_g) - g0) if np.isfinite(g0) else 0.0
    if b == -math.inf:
        verdict = "bounded"
    elif b > POWER_BAND:
        verdict = "unbounded"
    elif b < -POWER_BAND:
        verdict = "bounded"
    else:
        verdict = "unbounded" if c > LOG_BAND else "bounded"
    if verdict == "bounded" and np.isfinite(g0) and growth > math.log(GROWTH_CAP) \
            and b >= -POWER_BAND:
        verdict = "unbounded"
    return TailTrace(t, log_g, b, c, growth, verdict)


@dataclass
class Tightness:
    verdict: str
    trace: TailTrace | None = None
    reason: str = ""


def check_tightness_classical(m: DensityModel, w: WeightSpec, seq: BandSequence) -> Tightness:
    """Bounded iff limsup t Pr{Psi(X) > lambda_t} < inf (beta in (0, 1/2))."""
    if not m.satisfies_regularity:
        return Tightness("inapplicable", reason=_REFUSAL)
    if not 0.0 < w.beta < 0.5:
        return Tightness("inapplicable", reason="classical criterion needs 0 < beta < 1/2")
    trace = tail_condition_trace(m, w, seq)
    return Tightness(trace.verdict, trace)


def check_tightness_large(m: DensityModel, w: WeightSpec, dseq: NormingSequence,
                          seq: BandSequence | None = None) -> Tightness:
    """Bounded iff limsup t Pr{Psi(X) > d_t} < inf (beta in (0, 1])."""
    if not m.satisfies_regularity:
        return Tightness("inapplicable", reason=_REFUSAL)
    if not 0.0 < w.beta <= 1.0:
        return Tightness("inapplicable",
                         reason="large-norming criterion fails for beta > 1 "
                                "(the centering term blows up on the full line)")
    hyp = validate_norming(dseq, seq or BandSequence.power(0.5), w.beta)
    if not hyp["lower_power_bound"]:
        return Tightness("inapplicable", reason="d_t must dominate C t^beta")
    if seq is not None and not hyp["dominates_lambda"]:
        return Tightness("inapplicable", reason="d_t / lambda_t must diverge")
    trace = tail_condition_trace(m, w, dseq)
    return Tightness(trace.verdict, trace)


def integral_test(m: DensityModel, w: WeightSpec, norming, horizon: float = INTEGRAL_HORIZON,
                  decades: float = 6.0) -> IntegralTest:
    """Convergence of int Pr{Psi(X) > N_t} dt, judged at ``horizon``."""
    fn = _norming_fn(norming)

    def integrand_log_t(s):
        t = math.exp(s)
        return t * math.exp(float(log_weight_tail(m, w, fn(t))))

    start = _valid_start(fn)
    partial, _ = integrate.quad(integrand_log_t, math.log(start), math.log(horizon),
                                limit=500)
    # below ``start`` the norming is undefined; the probability is at most 1
    partial += start - 2.0
    t = np.geomspace(start, horizon, 400)
    log_p = np.asarray(log_weight_tail(m, w, np.asarray(fn(t))))
    b, c, _ = _fit_top(t, log_p, decades)
    resid = math.inf
    band = INTEGRAL_BAND
    if abs(b + 1.0) <= INTEGRAL_BAND:
        far = _far_fit(lambda u: np.asarray(log_weight_tail(m, w, np.asarray(fn(u)))))
        if far is not None:
            b, c, resid = far
            band = FAR_POWER_TOL
    if b == -math.inf or b < -1.0 - band:
        verdict = "converges"
    elif b > -1.0 + band:
        verdict = "diverges"
    elif c < -1.0 - LOG_BAND:
        verdict = "converges"
    elif c > -1.0 + LOG_BAND:
        verdict = "diverges"
    elif abs(c + 1.0) <= HARMONIC_LOG_TOL and resid <= 1e-6:
        # integrand ~ C / (t log t) with nothing slower left over: log log t growth
        verdict = "diverges"
    else:
        verdict = "inconclusive"
    return IntegralTest(verdict, float(partial), b, c, horizon)


_REFUSAL = ("the density violates the local ratio-smoothness conditions "
            "(a super-exponentially thin tail or an isolated zero), so the "
            "weight-tail criteria do not determine the behavior of the statistic")


def _exp_tail_boundary(m: DensityModel, w: WeightSpec, seq: BandSequence):
    """Stated outcomes for exp tails with 0 < r < 1 at 2 beta = 1 - alpha."""
    if not (isinstance(m, ExpTail) and not isinstance(m, SymExponential) and m.r < 1.0):
        return None
    if seq.form != "power" or not math.isclose(2.0 * w.beta, 1.0 - seq.alpha, abs_tol=1e-12):
        return None
    gap = (1.0 - m.r) / m.r - 1.0 / (2.0 * w.beta)
    if math.isclose(gap, 0.0, abs_tol=1e-12):
        return "bounded", "limsup_infinite", "tight with a max-term law (empirical only)"
    if gap > 0:
        return "unbounded", "limsup_infinite", "log-excess tail: not tight"
    if gap < -1:
        return "bounded", "converges_to_constant", "a.s. convergence to the constant"
    return "bounded", "limsup_infinite", "convergence in probability only"


def classify_regime(m: DensityModel, w: WeightSpec, seq: BandSequence,
                    dseq: NormingSequence | None = None,
                    k: KernelSpec | None = None) -> RegimePrediction:
    """Assemble tightness, integral test and limit into one prediction."""
    k = k or KernelSpec("boxcar")
    kind = "classical" if dseq is None else "large"
    if not m.satisfies_regularity:
        return RegimePrediction(kind, "inapplicable", "inapplicable", reason=_REFUSAL)
    if dseq is None:
        return _classify_classical(m, w, seq, k)
    return _classify_large(m, w, seq, dseq, k)


def _classify_classical(m, w, seq, k):
    central = k.l2_norm * w.scale * m.sup_norm ** (0.5 - w.beta) if w.beta <= 0.5 else None
    if w.beta == 0.0:
        return RegimePrediction("classical", "bounded", "converges_to_constant",
                                limit_constant=central,
                                reason="unweighted statistic: constant limit")
    if w.beta >= 0.5:
        if m.full_support:
            return RegimePrediction("classical", "unbounded", "limsup_infinite",
                                    reason="beta >= 1/2 on a full-support density")
        return RegimePrediction("classical", "inapplicable", "inapplicable",
                                reason="beta >= 1/2 with bounded support")

    tight = check_tightness_classical(m, w, seq)
    integ = integral_test(m, w, seq)
    evidence = {"tightness": tight, "integral": integ}
    lookup = _exp_tail_boundary(m, w, seq)
    if lookup is not None:
        t_verdict, as_b, why = lookup
        evidence["boundary_lookup"] = why
        return RegimePrediction("classical", t_verdict, as_b,
                                limit_constant=central if as_b == "converges_to_constant" else None,
                                evidence=evidence, reason=why)
    if tight.verdict == "unbounded":
        return RegimePrediction("classical", "unbounded", "limsup_infinite",
                                evidence=evidence, reason="tail condition fails")
    if integ.verdict == "converges":
        return RegimePrediction("classical", "bounded", "converges_to_constant",
                                limit_constant=central, evidence=evidence,
                                reason="tail integral converges")
    law = None
    if isinstance(m, SymExponential) and seq.form == "critical_log" \
            and math.isclose(seq.beta, w.beta):
        law = LimitLaw(
            "max_of_constant_and_scaled_Zbeta",
            beta=w.beta,
            scale=k.sup_norm * w.scale / math.sqrt(2.0 * (1.0 - 2.0 * w.beta)),
            constant=central,
            kappa=k.sup_norm,
            l2_norm=k.l2_norm,
        )
    as_b = "limsup_infinite" if integ.verdict == "diverges" else "inapplicable"
    return RegimePrediction("classical", "bounded", as_b, limit_law=law,
                            evidence=evidence,
                            reason="tight, tail integral " + integ.verdict)


def _classify_large(m, w, seq, dseq, k):
    tight = check_tightness_large(m, w, dseq, seq)
    if tight.verdict == "inapplicable":
        return RegimePrediction("large", "inapplicable", "inapplicable",
                                evidence={"tightness": tight}, reason=tight.reason)
    integ = integral_test(m, w, dseq)
    evidence = {"tightness": tight, "integral": integ}
    if integ.verdict == "converges":
        as_b = "converges_to_zero"
    elif integ.verdict == "diverges":
        as_b = "limsup_infinite"
    else:
        as_b = "inapplicable"
    law = None
    if isinstance(m, SymExponential) and dseq.log_power == 0.0 \
            and math.isclose(dseq.exponent, w.beta) and w.beta < 1.0 \
            and tight.verdict == "bounded":
        law = LimitLaw("max_of_constant_and_scaled_Zbeta", beta=w.beta,
                       scale=k.sup_norm * w.scale / dseq.scale, constant=0.0,
                       kappa=k.sup_norm, l2_norm=k.l2_norm)
    return RegimePrediction("large", tight.verdict, as_b,
                            limit_constant=0.0 if as_b == "converges_to_zero" else None,
                            limit_law=law, evidence=evidence,
                            reason="tail integral " + integ.verdict)
