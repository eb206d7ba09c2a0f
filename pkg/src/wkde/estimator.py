"""Kernel density estimator, its exact mean, and weighted sup deviations.

The supremum over the real line is taken over a finite candidate set: a
uniform grid of spacing h/g on the core of the density plus a stencil of
2g + 1 points of the same spacing around every sample point.  Far from
the sample f_n vanishes and the weighted deviation reduces to Psi * Ef_n,
which decays in the tails; near a sample point the stencil resolves the
window edges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .bandwidths import BandSequence, NormingSequence, h as bandwidth, sup_normalizer
from .densities import DensityModel, WeightSpec, weighted_norms
from .kernels import KernelSpec, kernel_eval

__all__ = [
    "QuadratureError",
    "Sample",
    "DeviationStatistic",
    "kde",
    "expected_kde",
    "expected_kde_grid",
    "candidate_set",
    "deviation_profile",
    "weighted_sup_deviation",
    "large_norming_deviation",
    "large_norming_statistic",
]

DEFAULT_STENCIL = 8
DEFAULT_CORE_FRAC = 1e-3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True, eq=False)
class Sample:
    """An i.i.d. sample; points are stored sorted for d = 1."""

    points: np.ndarray
    seed_lineage: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1)
        if pts.shape[0] < 1:
            raise ValueError("a sample needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        if pts.ndim == 1:
            pts = np.sort(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        return 1 if self.points.ndim == 1 else int(self.points.shape[1])


@dataclass
class DeviationStatistic:
    n: int
    statistic: float
    argmax_t: float
    max_term: float
    central_constant: float
    residual: float = field(init=False)
    large_norming_value: float | None = None

    def __post_init__(self):
        comp = self.max_term
        if not math.isnan(self.central_constant):
            comp = max(comp, self.central_constant)
        self.residual = self.statistic - comp


# ---------------------------------------------------------------------------
# estimator

def _window_sums(x: np.ndarray, k: KernelSpec, hh: float, t: np.ndarray) -> np.ndarray:
    """Sum_i K((X_i - t)/h) for sorted 1-d ``x`` via binary search."""
    half = 0.5 * hh
    lo = np.searchsorted(x, t - half, side="left")
    hi = np.searchsorted(x, t + half, side="right")
    if k.family == "boxcar":
        return (hi - lo).astype(float)

    # moments are differenced prefix sums; extended precision keeps the
    # cancellation (of order (range / h)^2 ulps) out of the result
    ld = np.longdouble
    ref = x[x.shape[0] // 2]
    xc = x.astype(ld) - ld(ref)
    s0 = np.arange(x.shape[0] + 1, dtype=float)
    s1 = np.concatenate([[ld(0)], np.cumsum(xc)])
    tc = t.astype(ld) - ld(ref)
    if k.family == "epanechnikov":
        s2 = np.concatenate([[ld(0)], np.cumsum(xc * xc)])
        cnt = s0[hi] - s0[lo]
        m1 = s1[hi] - s1[lo]
        m2 = s2[hi] - s2[lo]
        quad = m2 - 2.0 * tc * m1 + tc * tc * cnt
        out = 1.5 * (cnt - 4.0 * quad / (ld(hh) * ld(hh)))
    elif k.family == "triangular":
        mid = np.searchsorted(x, t, side="left")
        cl = s0[mid] - s0[lo]
        ml = s1[mid] - s1[lo]
        cr = s0[hi] - s0[mid]
        mr = s1[hi] - s1[mid]
        out = 2.0 * (cl + cr) - 4.0 / ld(hh) * ((tc * cl - ml) + (mr - tc * cr))
    else:  # pragma: no cover - guarded by KernelSpec
        raise ValueError(k.family)
    return np.maximum(out.astype(float), 0.0)


def kde(s: Sample, k: KernelSpec, h: float, t):
    """f_n(t) = (n h^d)^-1 sum_i K((X_i - t)/h), vectorized over ``t``."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if k.dimension != s.dimension:
        raise ValueError("kernel and sample dimensions differ")
    d = s.dimension
    t_arr = np.asarray(t, dtype=float)
    scale = 1.0 / (s.n * h**d)
    if d == 1:
        flat = t_arr.reshape(-1)
        out = _window_sums(s.points, k, h, flat) * scale
        out = out.reshape(t_arr.shape)
    else:
        pts = t_arr.reshape(-1, d)
        out = np.empty(pts.shape[0])
        for j in range(0, pts.shape[0], 256):
            block = pts[j:j + 256]
            u = (s.points[None, :, :] - block[:, None, :]) / h
            out[j:j + 256] = kernel_eval(k, u).sum(axis=1)
        out = (out * scale).reshape(t_arr.shape[:-1])
    return float(out) if out.ndim == 0 else out


def _integrand_pieces(m: DensityModel, k: KernelSpec, h: float, t: float):
    cuts = {-0.5, 0.5}
    if k.family != "boxcar":
        cuts.add(0.0)
    for b in m.breakpoints:
        u = (b - t) / h
        if -0.5 < u < 0.5:
            cuts.add(u)
    return sorted(cuts)


@lru_cache(maxsize=65536)
def _expected_kde_cached(m: DensityModel, k: KernelSpec, h: float, t: float,
                         tol: float) -> float:
    cuts = _integrand_pieces(m, k, h, t)

    def integrand(u):
        return kernel_eval(k, u) * m.pdf(t + h * u)

    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            value, abserr = integrate.quad(integrand, a, b, epsabs=tol, epsrel=0.0,
                                           limit=200)
        if caught or not abserr <= tol:
            raise QuadratureError(
                f"E f_n({t}) with h={h}: error estimate {abserr:.3g} exceeds {tol:.3g}"
            )
        total += value
    return total


def expected_kde(m: DensityModel, k: KernelSpec, h: float, t: float,
                 tol: float = 1e-12) -> float:
    """E f_n(t) = int K(u) f(t + h u) du by adaptive quadrature.

    Pieces are split at the kernel's kinks and at density breakpoints.
    Raises :class:`QuadratureError` if the error estimate exceeds ``tol``.
    Results are memoized on ``(model, kernel, h, t)``.
    """
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if k.dimension != 1:
        raise ValueError("expected_kde supports one-dimensional models")
    return _expected_kde_cached(m, k, float(h), float(t), float(tol))


def expected_kde_grid(m: DensityModel, k: KernelSpec, h: float, t) -> np.ndarray:
    """Vectorized E f_n on many points.

    The boxcar mean is an exact window probability divided by h.  Other
    kernels use 24-point Gauss-Legendre on each smooth piece of the
    integrand (kernel kinks and density breakpoints are split points).
    """
    t = np.asarray(t, dtype=float)
    if k.family == "boxcar":
        return m.interval_prob(t - 0.5 * h, t + 0.5 * h) / h

    base = [-0.5, 0.0, 0.5]
    extra = [(b - t) / h for b in m.breakpoints]
    cols = [np.full(t.shape, c) for c in base]
    cols += [np.clip(e, -0.5, 0.5) for e in extra]
    cuts = np.sort(np.stack(cols, axis=-1), axis=-1)
    total = np.zeros(t.shape)
    for j in range(cuts.shape[-1] - 1):
        a, b = cuts[..., j], cuts[..., j + 1]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        u = mid[..., None] + half[..., None] * _GL_NODES
        vals = kernel_eval(k, u) * m.pdf(t[..., None] + h * u)
        total += half * (vals @ _GL_WEIGHTS)
    return total


def candidate_set(s: Sample | None, m: DensityModel, k: KernelSpec, h: float,
                  core=None, g: int = DEFAULT_STENCIL) -> np.ndarray:
    """Sorted, deduplicated candidate points inside the positivity set.

    ``core`` is a radius ``a`` (grid on [-a, a]) or an interval ``(lo, hi)``;
    by default the interval where f >= 1e-3 sup f.  The grid is anchored at
    0 with spacing h/g.
    """
    step = h / g
    if core is None:
        lo, hi = m.core_interval(DEFAULT_CORE_FRAC)
    elif np.ndim(core) == 0:
        lo, hi = -float(core), float(core)
    else:
        lo, hi = map(float, core)
    j_lo = math.ceil(lo / step - 1e-9)
    j_hi = math.floor(hi / step + 1e-9)
    parts = [np.arange(j_lo, j_hi + 1) * step]
    if s is not None:
        offsets = np.arange(-g, g + 1) * step
        parts.append((s.points[:, None] + offsets[None, :]).reshape(-1))
    cands = np.unique(np.concatenate(parts))
    return cands[m.in_support(cands)]


def deviation_profile(s: Sample, m: DensityModel, k: KernelSpec, h: float,
                      w: WeightSpec, cands: np.ndarray) -> np.ndarray:
    """Psi(t) |f_n(t) - E f_n(t)| on the given points (log-domain weight)."""
    fn = kde(s, k, h, cands)
    efn = expected_kde_grid(m, k, h, cands)
    diff = np.abs(fn - efn)
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp(w.log_psi(m, cands) + np.log(diff))


def _max_log_psi(s: Sample, m: DensityModel, w: WeightSpec) -> float:
    return float(np.max(w.log_psi(m, s.points)))


def weighted_sup_deviation(s: Sample, m: DensityModel, k: KernelSpec,
                           seq: BandSequence, w: WeightSpec, core=None,
                           g: int = DEFAULT_STENCIL) -> DeviationStatistic:
    """Normalized weighted sup deviation and its max-term decomposition.

    statistic  sqrt(n h^d / (2 |log h^d|)) * max_t Psi(t) |f_n - E f_n|(t)
    max_term   ||K||_inf max_i Psi(X_i) / sqrt(2 n h^d |log h^d|)
    central    ||K||_2 sup Psi f^(1/2)
    """
    n = s.n
    if n < 2:
        raise ValueError("need n >= 2")
    hh = bandwidth(seq, n)
    norm = sup_normalizer(seq, n)
    factor = n * hh**seq.d / norm  # equals sqrt(n h^d / (2 |log h^d|))
    cands = candidate_set(s, m, k, hh, core, g)
    prof = deviation_profile(s, m, k, hh, w, cands)
    i = int(np.argmax(prof))
    stat = factor * float(prof[i])
    max_term = k.sup_norm * math.exp(_max_log_psi(s, m, w)) / norm
    central = k.l2_norm * weighted_norms(m, w)[0]
    return DeviationStatistic(n, stat, float(cands[i]), max_term, central)


def large_norming_deviation(s: Sample, m: DensityModel, k: KernelSpec,
                            seq: BandSequence, w: WeightSpec, dseq: NormingSequence,
                            core=None, g: int = DEFAULT_STENCIL) -> DeviationStatistic:
    """max_t Psi(t) |sum_i K((X_i - t)/h) - n E K((X - t)/h)| / d_n.

    The max term is ||K||_inf max_i Psi(X_i) / d_n and there is no central
    constant (it is reported as 0).
    """
    n = s.n
    # sequences live on t >= 2; n = 1 reuses their value at 2
    hh = bandwidth(seq, max(n, 2))
    d_n = dseq(max(n, 2))
    cands = candidate_set(s, m, k, hh, core, g)
    prof = deviation_profile(s, m, k, hh, w, cands)
    i = int(np.argmax(prof))
    stat = n * hh**seq.d * float(prof[i]) / d_n
    max_term = k.sup_norm * math.exp(_max_log_psi(s, m, w)) / d_n
    return DeviationStatistic(n, stat, float(cands[i]), max_term, 0.0,
                              large_norming_value=stat)


def large_norming_statistic(s: Sample, m: DensityModel, k: KernelSpec,
                            seq: BandSequence, w: WeightSpec, dseq: NormingSequence,
                            core=None, g: int = DEFAULT_STENCIL) -> float:
    return large_norming_deviation(s, m, k, seq, w, dseq, core, g).statistic
