import math

import mpmath
import numpy as np
import pytest

from prior_forge import InputError, digamma, log_beta, log_gamma

mpmath.mp.dps = 50


def test_log_gamma_pinned_values():
    assert log_gamma(1.0) == 0.0
    assert abs(log_gamma(0.5) - math.log(math.sqrt(math.pi))) <= 1e-12
    assert abs(log_gamma(5.0) - math.log(24.0)) <= 1e-12


def test_log_gamma_against_high_precision_reference():
    # absolute 1e-12 where the magnitude allows it, relative a few ulp
    # everywhere across the working range
    xs = [1e-6, 1e-3, 0.07, 0.5, 1.0, 1.5, 2.0, 7.3, 41.0, 1e3, 1e6]
    for x in xs:
        want = float(mpmath.loggamma(x))
        got = log_gamma(x)
        tol = max(1e-12, 5e-13 * abs(want))
        assert abs(got - want) <= tol, f"x={x}: {got} vs {want}"


def test_log_beta_pinned_values():
    assert log_beta(1.0, 1.0) == 0.0
    assert abs(log_beta(0.5, 0.5) - math.log(math.pi)) <= 1e-12
    assert abs(log_beta(2.0, 3.0) - math.log(1.0 / 12.0)) <= 1e-12


def test_log_beta_against_high_precision_reference():
    pairs = [(0.5, 0.5), (2.0, 3.0), (7.3, 0.4), (100.0, 0.01), (1e3, 1e3)]
    for a, b in pairs:
        want = float(mpmath.loggamma(a) + mpmath.loggamma(b) - mpmath.loggamma(a + b))
        got = log_beta(a, b)
        assert abs(got - want) <= max(1e-12, 5e-13 * abs(want))


def test_digamma_matches_reference():
    for x in (0.5, 1.0, 2.0, 10.0, 500.0):
        want = float(mpmath.digamma(x))
        assert abs(digamma(x) - want) <= max(1e-12, 1e-13 * abs(want))


def test_vectorized_over_arrays():
    xs = np.array([0.5, 1.0, 2.0])
    out = log_gamma(xs)
    assert out.shape == xs.shape
    assert abs(out[1]) == 0.0


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_rejects_nonpositive_arguments(bad):
    with pytest.raises(InputError):
        log_gamma(bad)
    with pytest.raises(InputError):
        log_beta(bad, 1.0)
    with pytest.raises(InputError):
        digamma(bad)
