import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wkde.bandwidths import BandSequence, NormingSequence
from wkde.conditions import (
    LimitLaw,
    RegimePrediction,
    check_tightness_classical,
    check_tightness_large,
    classify_regime,
    integral_test,
    tail_condition_trace,
)
from wkde.densities import DoubleLog, ExpTail, Normal, PowerTail, SymExponential, WeightSpec, \
    ZeroAtOrigin
from wkde.kernels import kernel

SYM = SymExponential()
GRID9 = [round(0.1 * i, 1) for i in range(1, 10)]


def test_classical_examples():
    seq = BandSequence.power(0.4)
    assert check_tightness_classical(SYM, WeightSpec(0.2), seq).verdict == "bounded"
    assert check_tightness_classical(SYM, WeightSpec(0.4), seq).verdict == "unbounded"
    assert check_tightness_classical(PowerTail(r=3.0), WeightSpec(0.2), seq).verdict == "bounded"


def test_classical_trace_matches_closed_form():
    seq, beta = BandSequence.power(0.4), 0.25
    tr = tail_condition_trace(SYM, WeightSpec(beta), seq)
    t = tr.t
    lam = np.sqrt(t * t ** -0.4 * 0.4 * np.log(t))
    want = t * np.minimum(1.0, 2.0 * lam ** (-1.0 / beta))
    assert np.allclose(tr.g, want, rtol=1e-10)


def test_classical_refusals():
    seq = BandSequence.power(0.4)
    assert check_tightness_classical(DoubleLog(), WeightSpec(0.2), seq).verdict == "inapplicable"
    assert check_tightness_classical(ZeroAtOrigin(), WeightSpec(0.2), seq).verdict == "inapplicable"
    assert check_tightness_classical(SYM, WeightSpec(0.5), seq).verdict == "inapplicable"


def test_large_examples():
    seq = BandSequence.power(0.4)
    assert check_tightness_large(SYM, WeightSpec(0.7), NormingSequence(0.7), seq).verdict == "bounded"
    tr = check_tightness_large(SYM, WeightSpec(1.0), NormingSequence(1.0))
    assert tr.verdict == "bounded"
    assert np.allclose(tr.trace.g, tr.trace.t * np.minimum(1.0, 2.0 / tr.trace.t), rtol=1e-12)
    assert check_tightness_large(SYM, WeightSpec(1.2), NormingSequence(1.2)).verdict == "inapplicable"


def test_large_requires_power_lower_bound_and_domination():
    seq = BandSequence.power(0.4)
    assert check_tightness_large(SYM, WeightSpec(0.7), NormingSequence(0.5)).verdict == "inapplicable"
    # d_t = t^0.3 does not dominate lambda_t ~ t^0.3 (log t)^0.5
    assert check_tightness_large(SYM, WeightSpec(0.3), NormingSequence(0.3), seq).verdict \
        == "inapplicable"


def test_large_norming_tail_criterion():
    # with d_t = t^beta: t Pr{f^-beta > t^beta} = t min(1, 2/t) -> 2 for any beta in (0, 1]
    for b in (0.31, 0.5, 0.7, 0.9, 1.0):
        assert check_tightness_large(SYM, WeightSpec(b), NormingSequence(b)).verdict == "bounded"
    # a smaller power of t in the norming fails d_t >= C t^beta
    for b in (0.5, 0.7):
        v = check_tightness_large(SYM, WeightSpec(b), NormingSequence(b - 0.1)).verdict
        assert v == "inapplicable"


def test_integral_examples():
    seq = BandSequence.power(0.4)
    res = integral_test(SYM, WeightSpec(0.25), seq)
    assert res.verdict == "converges"
    assert res.power_exponent == pytest.approx(-1.2, abs=1e-6)
    # closed-form integrand 2 (t^0.6 * 0.4 ln t)^-2 once it is below one
    t = np.geomspace(1e3, 1e12, 50)
    from wkde.densities import weight_tail
    lam = np.sqrt(t ** 0.6 * 0.4 * np.log(t))
    assert np.allclose(weight_tail(SYM, WeightSpec(0.25), lam), 2.0 * (t ** 0.6 * 0.4 * np.log(t)) ** -2,
                       rtol=1e-10)
    w = WeightSpec(0.7)
    assert integral_test(SYM, w, NormingSequence.from_c(0.7, 2.0)).verdict == "converges"
    assert integral_test(SYM, w, NormingSequence.from_c(0.7, 0.0)).verdict == "diverges"


def test_integral_log_boundary():
    # integrand 2 / (t log t) diverges like log log t
    res = integral_test(SYM, WeightSpec(0.7), NormingSequence.from_c(0.7, 1.0))
    assert res.verdict == "diverges"
    assert res.log_exponent == pytest.approx(-1.0, abs=1e-6)
    # 2 / (t (log t)^1.02) converges, but too slowly to call from the fit
    res = integral_test(SYM, WeightSpec(0.7), NormingSequence.from_c(0.7, 1.02))
    assert res.verdict == "inconclusive"


@pytest.mark.parametrize("q,verdict", [(0.0, "diverges"), (0.5, "diverges"), (1.0, "diverges"),
                                       (1.5, "converges"), (2.0, "converges"),
                                       (3.0, "converges")])
def test_integral_matches_dt_over_c(q, verdict):
    # Pr{f^-beta(X) > c(t)^beta} = 2 / c(t), so the verdict is that of int dt / (t (log t)^q)
    assert integral_test(SYM, WeightSpec(0.7), NormingSequence.from_c(0.7, q)).verdict == verdict


def test_classify_examples():
    p = classify_regime(SYM, WeightSpec(0.25), BandSequence.power(0.4))
    assert (p.tightness, p.as_behavior) == ("bounded", "converges_to_constant")
    assert p.limit_constant == pytest.approx(2 ** -0.25)

    p = classify_regime(SYM, WeightSpec(0.25), BandSequence.critical_log(0.25))
    assert p.tightness == "bounded" and p.as_behavior == "limsup_infinite"
    law = p.limit_law
    assert law is not None and law.kind == "max_of_constant_and_scaled_Zbeta"
    assert law.beta == 0.25
    assert law.scale == pytest.approx(1.0 / math.sqrt(2 * (1 - 0.5)))
    assert law.constant == pytest.approx(1.0 / 2 ** 0.25)

    p = classify_regime(SYM, WeightSpec(0.5), BandSequence.power(0.4))
    assert p.tightness == "unbounded"


def test_classify_limit_law_kernel_constants():
    k = kernel("epanechnikov")
    p = classify_regime(SYM, WeightSpec(0.2), BandSequence.critical_log(0.2), k=k)
    assert p.limit_law.scale == pytest.approx(1.5 / math.sqrt(2 * 0.6))
    assert p.limit_law.constant == pytest.approx(math.sqrt(1.2) * 0.5 ** 0.3)


def test_classify_large():
    seq = BandSequence.power(0.4)
    p = classify_regime(SYM, WeightSpec(0.7), seq, NormingSequence(0.7))
    assert p.norming_kind == "large" and p.tightness == "bounded"
    assert p.as_behavior == "limsup_infinite"
    assert p.limit_law.scale == 1.0 and p.limit_law.beta == 0.7
    p = classify_regime(SYM, WeightSpec(0.7), seq, NormingSequence.from_c(0.7, 2.0))
    assert p.as_behavior == "converges_to_zero" and p.limit_constant == 0.0


def test_classify_unweighted_and_refusals():
    p = classify_regime(Normal(0, 1), WeightSpec(0.0), BandSequence.power(0.4))
    assert p.as_behavior == "converges_to_constant"
    assert p.limit_constant == pytest.approx(Normal(0, 1).sup_norm ** 0.5)
    for m in (DoubleLog(), ZeroAtOrigin(s=2.0)):
        p = classify_regime(m, WeightSpec(0.1), BandSequence.power(0.4))
        assert p.tightness == "inapplicable" and p.reason
        assert "paper" not in p.reason.lower()


def test_zero_at_origin_trace_bounded_but_refused():
    # the tail condition holds here, yet no boundedness prediction is issued
    m = ZeroAtOrigin(s=2.0)
    assert tail_condition_trace(m, WeightSpec(0.3), BandSequence.power(0.4)).verdict == "bounded"
    assert classify_regime(m, WeightSpec(0.3), BandSequence.power(0.4)).tightness == "inapplicable"


@pytest.mark.parametrize("r,beta,tight,as_b", [
    (0.3, 0.45, "unbounded", "limsup_infinite"),      # (1-r)/r = 2.33 > 1/(2 beta) = 1.11
    (1 / 3, 0.25, "bounded", "limsup_infinite"),      # equality: 2 = 2
    (0.5, 0.25, "bounded", "limsup_infinite"),        # gap = -1: in probability only
    (0.8, 0.3, "bounded", "converges_to_constant"),   # gap = 0.25 - 1.67 < -1
])
def test_exp_tail_boundary_lookup(r, beta, tight, as_b):
    p = classify_regime(ExpTail(r=r), WeightSpec(beta), BandSequence.power(1.0 - 2.0 * beta))
    assert (p.tightness, p.as_behavior) == (tight, as_b)
    assert p.evidence["boundary_lookup"]


def test_prediction_invariant():
    with pytest.raises(ValueError):
        RegimePrediction("classical", "unbounded", "converges_to_constant")


@pytest.mark.parametrize("m", [SYM, ExpTail(r=2.0), Normal(0, 1), PowerTail(r=3.0),
                               PowerTail(r=1.5)], ids=repr)
def test_integral_convergence_implies_tightness(m):
    for a in (0.2, 0.4, 0.6, 0.8):
        seq = BandSequence.power(a)
        for b in (0.05, 0.15, 0.25, 0.35, 0.45):
            w = WeightSpec(b)
            if integral_test(m, w, seq).verdict == "converges":
                assert check_tightness_classical(m, w, seq).verdict == "bounded"


def _sweep(m, crit):
    bad = []
    for a in GRID9:
        for b in GRID9:
            if b >= 0.5:
                continue
            v = check_tightness_classical(m, WeightSpec(b), BandSequence.power(a)).verdict
            if (v == "bounded") != crit(a, b):
                bad.append((a, b, v))
    return bad


@pytest.mark.parametrize("m", [SYM, ExpTail(r=1.0), ExpTail(r=1.5), ExpTail(r=2.0),
                               ExpTail(c2=3.0, r=3.0), Normal(0, 1)], ids=repr)
def test_exponential_type_sweep(m):
    assert _sweep(m, lambda a, b: 2 * b <= 1 - a + 1e-12) == []


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0, 5.0])
def test_power_tail_sweep(r):
    assert _sweep(PowerTail(r=r), lambda a, b: b <= (r - 1) * (1 - a) / (2 * r) + 1e-12) == []


@pytest.mark.parametrize("s", [1.0, 2.0, 4.0, 8.0])
def test_zero_at_origin_sweep(s):
    m = ZeroAtOrigin(s=s)
    bad = []
    for a in GRID9:
        for b in GRID9:
            v = tail_condition_trace(m, WeightSpec(b), BandSequence.power(a)).verdict
            if (v == "bounded") != (b <= (1 - a) / 2 * (1 + 1 / s) + 1e-12):
                bad.append((a, b, v))
    assert bad == []


@given(st.floats(0.001, 0.999), st.floats(0.05, 1.0), st.floats(0.1, 5.0), st.floats(0.0, 2.0))
def test_limit_law_roundtrip(p, beta, scale, const):
    law = LimitLaw("max_of_constant_and_scaled_Zbeta", beta=beta, scale=scale, constant=const)
    q = law.quantile(p)
    if q > const:
        assert law.cdf(q) == pytest.approx(p, abs=1e-12)
    else:
        # p falls inside the atom at the constant
        assert law.cdf(const) >= p - 1e-12
    z = LimitLaw("max_of_constant_and_scaled_Zbeta", beta=beta, scale=scale)
    assert z.cdf(z.quantile(p)) == pytest.approx(p, abs=1e-12)
    assert LimitLaw.z_cdf(LimitLaw.z_quantile(p)) == pytest.approx(p, abs=1e-12)


def test_limit_law_shape():
    law = LimitLaw("max_of_constant_and_scaled_Zbeta", beta=0.25, scale=1.0, constant=0.84)
    x = np.linspace(-1, 50, 5001)
    c = law.cdf(x)
    assert np.all(np.diff(c) >= 0)
    assert c[0] == 0.0 and law.cdf(1e12) == pytest.approx(1.0, abs=1e-6)
    assert law.cdf(0.8399) == 0.0 and law.cdf(0.84) > 0.0
    assert LimitLaw("constant", constant=2.0).cdf(2.0) == 1.0
    assert LimitLaw("constant", constant=2.0).cdf(1.999) == 0.0
