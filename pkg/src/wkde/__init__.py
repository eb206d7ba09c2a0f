"""Weighted sup-norm deviations of kernel density estimators."""

from .bandwidths import BandSequence, NormingSequence, h, lam, sup_normalizer
from .conditions import LimitLaw, RegimePrediction, classify_regime, integral_test, \
    tail_condition_trace
from .densities import WeightSpec, make_density, weight_tail
from .estimator import Sample, kde, expected_kde, weighted_sup_deviation, \
    large_norming_deviation
from .kernels import KernelSpec, kernel

__all__ = [
    "BandSequence", "NormingSequence", "h", "lam", "sup_normalizer",
    "LimitLaw", "RegimePrediction", "classify_regime", "integral_test",
    "tail_condition_trace", "WeightSpec", "make_density", "weight_tail",
    "Sample", "kde", "expected_kde", "weighted_sup_deviation",
    "large_norming_deviation", "KernelSpec", "kernel",
]
