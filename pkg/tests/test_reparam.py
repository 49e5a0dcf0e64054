import math

import numpy as np
import pytest

from prior_forge.errors import InputError
from prior_forge.reparam import (dirichlet_equivalence_report,
                                 gamma_normalize_sample,
                                 ordered_prior_diagnostics, stick_break)
from prior_forge.streams import RandomStream


def test_stick_break_worked_example():
    theta = stick_break((0.5, 0.5))
    np.testing.assert_allclose(theta, [0.5, 0.25, 0.25], atol=0)
    assert theta.sum() == 1.0


def test_stick_break_general_values():
    xi = (0.2, 0.6, 0.3)
    theta = stick_break(xi)
    want = [0.2, 0.8 * 0.6, 0.8 * 0.4 * 0.3, 0.8 * 0.4 * 0.7]
    np.testing.assert_allclose(theta, want, rtol=1e-15)
    assert theta.sum() == pytest.approx(1.0, abs=1e-15)


def test_stick_break_domain_errors():
    for bad in ((0.0, 0.5), (0.5, 1.0), (-0.1,), (math.nan, 0.5), ()):
        with pytest.raises(InputError):
            stick_break(bad)


def test_gamma_normalize_rows_are_probability_vectors():
    w = gamma_normalize_sample(0.5, 2.0, 5, 1000, RandomStream(1, 0))
    assert w.shape == (1000, 5)
    assert np.all(w > 0)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_gamma_normalize_validation():
    s = RandomStream(0, 0)
    with pytest.raises(InputError):
        gamma_normalize_sample(0.0, 1.0, 3, 10, s)
    with pytest.raises(InputError):
        gamma_normalize_sample(1.0, 0.0, 3, 10, s)
    with pytest.raises(InputError):
        gamma_normalize_sample(1.0, 1.0, 1, 10, s)
    with pytest.raises(InputError):
        gamma_normalize_sample(1.0, 1.0, 3, 0, s)


def test_equivalence_report_passes_for_symmetric_dirichlet():
    rep = dirichlet_equivalence_report(0.5, 4, 50_000, (0.1, 1.0, 10.0),
                                       RandomStream(77, 0))
    assert rep.all_ok
    assert len(rep.checks) == 3
    for c in rep.checks:
        assert c.mean_ok and c.var_ok and c.ks_ok
        assert c.analytic_mean == pytest.approx(0.25)
    # scale invariance is algebraic, not statistical
    assert rep.exact_invariance_sup < 1e-14


def test_equivalence_report_deterministic():
    a = dirichlet_equivalence_report(1.0, 3, 2000, (0.5, 2.0), RandomStream(5, 1))
    b = dirichlet_equivalence_report(1.0, 3, 2000, (0.5, 2.0), RandomStream(5, 1))
    assert a == b


def test_equivalence_report_validation():
    with pytest.raises(InputError):
        dirichlet_equivalence_report(1.0, 3, 100, (), RandomStream(0, 0))
    with pytest.raises(InputError):
        dirichlet_equivalence_report(1.0, 3, 100, (1.0, -2.0), RandomStream(0, 0))


def test_ordered_diagnostics_small_m():
    d = ordered_prior_diagnostics(3, 100_000, RandomStream(123, 0))
    assert [r.analytic_mean for r in d.rows] == [0.5, 0.25, 0.25]
    for r in d.rows:
        se = 4.0 / math.sqrt(d.count)  # generous: theta_k has variance < 1
        assert abs(r.empirical_mean - r.analytic_mean) < se
    assert d.mean_sum == pytest.approx(1.0, abs=1e-12)
    # means are 1/2, 1/4, 1/4 against the uniform level 1/3: the second
    # cell is the first to drop below it
    assert d.k_star == 2


def test_ordered_diagnostics_means_halve():
    d = ordered_prior_diagnostics(10, 200_000, RandomStream(9, 0))
    means = np.array([r.empirical_mean for r in d.rows])
    analytic = np.array([r.analytic_mean for r in d.rows])
    assert analytic[-1] == analytic[-2] == 2.0 ** -9
    np.testing.assert_allclose(means, analytic, atol=4e-3)
    # medians drop below means from the second cell on (the first is a
    # symmetric Beta(1/2, 1/2); later cells are right-skewed products)
    medians = np.array([r.empirical_median for r in d.rows])
    assert np.all(medians[1:5] < means[1:5])


def test_ordered_diagnostics_validation():
    with pytest.raises(InputError):
        ordered_prior_diagnostics(1, 100, RandomStream(0, 0))
    with pytest.raises(InputError):
        ordered_prior_diagnostics(3, 0, RandomStream(0, 0))


def test_conditional_cell_split_matches_binomial():
    # splitting a two-cell vector by total count: the count in the first
    # cell given the total is binomial with the normalized rate; verified
    # by exhaustive enumeration of small Poisson-product tables
    lam = (0.7, 1.9)
    for total in (1, 2, 3):
        p = lam[0] / (lam[0] + lam[1])
        for k in range(total + 1):
            joint = (math.exp(-lam[0]) * lam[0] ** k / math.factorial(k)
                     * math.exp(-lam[1]) * lam[1] ** (total - k)
                     / math.factorial(total - k))
            marg = (math.exp(-sum(lam)) * sum(lam) ** total
                    / math.factorial(total))
            binom = (math.comb(total, k) * p ** k * (1 - p) ** (total - k))
            assert joint / marg == pytest.approx(binom, rel=1e-14)
