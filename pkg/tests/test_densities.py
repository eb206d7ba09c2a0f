import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from wkde.densities import (
    DoubleLog,
    ExpTail,
    Normal,
    PowerTail,
    SymExponential,
    WeightSpec,
    ZeroAtOrigin,
    make_density,
    weight_tail,
    weighted_norms,
)

MODELS = [
    SymExponential(),
    ExpTail(c2=1.0, r=2.0),
    ExpTail(c2=0.5, r=0.5),
    ExpTail(c2=2.0, r=3.0),
    Normal(0.0, 1.0),
    Normal(1.0, 2.0),
    PowerTail(r=3.0),
    PowerTail(r=1.5),
    DoubleLog(),
    ZeroAtOrigin(s=2.0, a=1.0),
    ZeroAtOrigin(s=1.0, a=0.5),
]
IDS = [repr(m) for m in MODELS]


def test_sym_exponential_pdf_values():
    m = SymExponential()
    assert m.pdf(0.0) == 0.5
    assert m.pdf(math.log(2.0)) == pytest.approx(0.25, abs=1e-16)


def test_zero_at_origin_vanishes_at_zero():
    m = ZeroAtOrigin(s=2.0, a=1.0)
    assert m.c == pytest.approx(1.5)
    assert m.pdf(0.0) == 0.0
    assert m.pdf(1.5) == 0.0


def test_sym_exponential_quantiles():
    m = SymExponential()
    assert m.quantile(0.5) == 0.0
    assert m.quantile(0.75) == pytest.approx(math.log(2.0), abs=1e-15)


def test_power_tail_quantile_growth():
    m = PowerTail(r=3.0)
    # Pr{X > x} = (1 + x)^-2 / 2 for x >= 0, so q(1 - eps) = (2 eps)^-1/2 - 1
    for eps in (1e-4, 1e-6, 1e-8):
        q = m.quantile(1.0 - eps)
        assert q == pytest.approx((2.0 * eps) ** -0.5 - 1.0, rel=1e-6)
        assert q * eps ** 0.5 == pytest.approx(2 ** -0.5, rel=2e-2)


def _integrate_pdf(m, lo, hi):
    # split at breakpoints; quad handles the infinite end pieces
    cuts = [lo] + sorted(p for p in m.breakpoints if lo < p < hi) + [hi]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        total += integrate.quad(m.pdf, a, b, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return total


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_pdf_integrates_to_one(m):
    total = sum(_integrate_pdf(m, a, b) for a, b in m.support)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_cdf_matches_pdf_integral(m):
    lo = m.support[0][0]
    for xi in m.quantile(np.array([0.1, 0.3, 0.5, 0.8])):
        assert _integrate_pdf(m, lo, xi) == pytest.approx(float(m.cdf(xi)), abs=1e-8)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_sampler_ks(m):
    from scipy import stats
    rng = np.random.default_rng(2024)
    n = 100_000
    x = m.sample(rng, n)
    d = stats.kstest(x, m.cdf).statistic
    assert d < 1.63 / math.sqrt(n)


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_log_pdf_consistent(m):
    x = np.concatenate([np.linspace(-30, 30, 1201), m.quantile(np.geomspace(1e-12, 0.5, 50))])
    p = m.pdf(x)
    lp = m.log_pdf(x)
    mask = p > 1e-300
    assert np.all(np.abs(p[mask] - np.exp(lp[mask])) <= 1e-12 * p[mask])
    assert np.all(p[~mask] <= 1e-300)


@pytest.mark.parametrize("m", [ZeroAtOrigin(s=2.0, a=1.0), DoubleLog()], ids=repr)
def test_pdf_zero_outside_support(m):
    x = np.array([-5.0, -1.5, 2.5, 100.0]) if isinstance(m, ZeroAtOrigin) else \
        np.array([-3.0, -1e-9, -100.0])
    assert np.all(m.pdf(x) == 0.0)
    assert not np.any(m.in_support(x))


def test_exp_tail_quantile_roundtrip():
    m = ExpTail(c2=1.3, r=2.7)
    p = np.linspace(0.001, 0.999, 57)
    assert np.allclose(m.cdf(m.quantile(p)), p, atol=1e-12)


def test_weight_tail_examples():
    m = SymExponential()
    assert weight_tail(m, WeightSpec(1.0), 4.0) == pytest.approx(0.5)
    assert weight_tail(m, WeightSpec(0.5), 2.0) == pytest.approx(0.5)
    for b in (0.1, 0.25, 0.5, 1.0):
        assert weight_tail(m, WeightSpec(b), 1.0) == 1.0


def test_weighted_norms_examples():
    m = SymExponential()
    assert weighted_norms(m, WeightSpec(0.25)) == pytest.approx((2 ** -0.25, 0.5))
    assert weighted_norms(m, WeightSpec(0.0)) == pytest.approx((2 ** -0.5, 0.5))
    for mm in (SymExponential(), Normal(0.0, 0.3), PowerTail(r=2.0)):
        assert weighted_norms(mm, WeightSpec(0.5)) == pytest.approx((1.0, mm.sup_norm))


def _closed_form_tail(m, beta, u):
    # Pr{f(X) < tau} with tau = u^(-1/beta), derived per family
    tau = u ** (-1.0 / beta)
    if isinstance(m, SymExponential):
        return min(1.0, 2.0 * tau)
    if isinstance(m, Normal):
        # f < tau  <=>  |x - mu| > sigma sqrt(-2 log(tau sigma sqrt(2 pi)))
        arg = tau * m.sigma * math.sqrt(2 * math.pi)
        if arg >= 1:
            return 1.0
        return 2.0 * special.ndtr(-math.sqrt(-2.0 * math.log(arg)))
    if isinstance(m, PowerTail):
        c = (m.r - 1.0) / 2.0
        if tau >= c:
            return 1.0
        x = (c / tau) ** (1.0 / m.r) - 1.0
        return (1.0 + x) ** (1.0 - m.r)
    if isinstance(m, ZeroAtOrigin):
        # f = c |x|^s < tau on |x| < (tau / c)^(1/s)
        x = min((tau / m.c) ** (1.0 / m.s), m.a)
        return (x / m.a) ** (m.s + 1.0)
    raise TypeError(m)


@pytest.mark.parametrize("m", [SymExponential(), Normal(0.5, 1.5), PowerTail(r=3.0),
                               ZeroAtOrigin(s=2.0, a=1.0)], ids=repr)
@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_weight_tail_closed_forms(m, beta):
    w = WeightSpec(beta)
    for u in np.geomspace(0.5, 1e6, 25):
        assert weight_tail(m, w, u) == pytest.approx(_closed_form_tail(m, beta, u),
                                                     rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("m", [SymExponential(), ExpTail(c2=1.0, r=2.0), ExpTail(c2=1.0, r=0.5),
                               Normal(0.0, 1.0), PowerTail(r=2.5), DoubleLog(),
                               ZeroAtOrigin(s=2.0, a=1.0)], ids=repr)
def test_weight_tail_empirical(m):
    rng = np.random.default_rng(99)
    n = 100_000
    w = WeightSpec(0.4)
    psi = w.psi(m, m.sample(rng, n))
    lo, hi = np.quantile(psi, [0.01, 0.995])
    for u in np.geomspace(lo, hi, 15):
        p = float(weight_tail(m, w, u))
        emp = float(np.mean(psi > u))
        assert abs(emp - p) <= 3.0 * math.sqrt(p * (1 - p) / n) + 1e-12


@pytest.mark.parametrize("m", MODELS, ids=IDS)
def test_weight_tail_monotone_and_one_below_inf(m):
    w = WeightSpec(0.3)
    u = np.geomspace(1e-3, 1e8, 400)
    p = weight_tail(m, w, u)
    assert np.all(np.diff(p) <= 1e-15)
    inf_psi = m.sup_norm ** (-w.beta)
    assert weight_tail(m, w, 0.99 * inf_psi) == 1.0


def test_zero_at_origin_small_ball_rate():
    for s in (1.0, 2.0, 4.0):
        m = ZeroAtOrigin(s=s, a=1.0)
        t = np.geomspace(1e-6, 1e-1, 50)
        ratio = m.interval_prob(-t, t) / t ** (s + 1.0)
        # closed form: 2 c t^(s+1) / (s+1)
        bound = 2.0 * m.c / (s + 1.0)
        assert np.all(ratio <= bound * (1 + 1e-9))
        assert np.all(ratio >= bound * (1 - 1e-6))


def test_weight_psi_times_f_beta_is_scale():
    m = Normal(0.0, 1.0)
    w = WeightSpec(0.3, scale=2.0)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(w.psi(m, x) * m.pdf(x) ** 0.3, 2.0)


def test_psi_log_domain_far_tail():
    # f underflows at |x| = 800, the log-domain weight does not
    m = SymExponential()
    assert m.pdf(800.0) == 0.0
    assert WeightSpec(0.25).log_psi(m, 800.0) == pytest.approx(0.25 * (800 + math.log(2)))


def test_make_density_and_validation():
    assert isinstance(make_density("sym_exponential"), SymExponential)
    assert make_density("power_tail", r=4.0).r == 4.0
    with pytest.raises(ValueError):
        make_density("cauchy")
    with pytest.raises(ValueError):
        PowerTail(r=1.0)
    with pytest.raises(ValueError):
        WeightSpec(2.5)


def test_regularity_flags():
    assert SymExponential().satisfies_regularity
    assert not DoubleLog().satisfies_regularity
    assert not ZeroAtOrigin().satisfies_regularity
    assert not ZeroAtOrigin().full_support


@given(st.floats(0.05, 1.0), st.floats(1e-3, 1e6))
@settings(max_examples=60)
def test_sym_exponential_tail_formula(beta, u):
    got = weight_tail(SymExponential(), WeightSpec(beta), u)
    assert got == pytest.approx(min(1.0, 2.0 * u ** (-1.0 / beta)), rel=1e-12)


@given(st.floats(1e-9, 1 - 1e-9))
def test_sym_exponential_quantile_cdf_roundtrip(p):
    m = SymExponential()
    assert float(m.cdf(m.quantile(p))) == pytest.approx(p, abs=1e-14)
