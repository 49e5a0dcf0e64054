"""Constructions of random probability vectors and their equivalences.

Two routes to a symmetric Dirichlet: direct gamma normalization (whose
law is free of the gamma scale) and, for ordered cells, stick-breaking
with Beta(1/2, 1/2) sticks, whose cell means halve at each step. The
report types here quantify both claims from samples so the checks carry
explicit statistical error bars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, kolmogi

from .errors import InputError
from .streams import RandomStream


@dataclass(frozen=True)
class StickBreakingSample:
    """Stick fractions and the resulting probability vector.

    theta has one more entry than xi; its last component is computed by
    subtraction so the vector sums to 1 exactly.
    """

    xi: np.ndarray
    theta: np.ndarray


def stick_break(xi) -> np.ndarray:
    """Probability vector from stick fractions in (0, 1).

    theta_1 = xi_1, theta_k = xi_k * prod_{j<k} (1 - xi_j), and the last
    component is the remaining stick, computed by subtraction (clamped at
    zero against rounding). Fractions outside the open interval are a
    domain error.
    """
    x = np.asarray(xi, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise InputError("xi must be a nonempty 1-D vector")
    if np.any(x <= 0.0) or np.any(x >= 1.0) or not np.all(np.isfinite(x)):
        raise InputError("stick fractions must lie strictly inside (0, 1)")
    theta = _stick_break_rows(x[None, :])[0]
    return theta


def _stick_break_rows(xi: np.ndarray) -> np.ndarray:
    """Vectorized stick-breaking over rows of fractions."""
    count, mm1 = xi.shape
    remaining = np.cumprod(1.0 - xi, axis=1)
    theta = np.empty((count, mm1 + 1))
    theta[:, 0] = xi[:, 0]
    if mm1 > 1:
        theta[:, 1:mm1] = xi[:, 1:] * remaining[:, :-1]
    theta[:, mm1] = np.maximum(0.0, 1.0 - theta[:, :mm1].sum(axis=1))
    return theta


def gamma_normalize_sample(a: float, beta: float, m: int, count: int,
                           stream: RandomStream) -> np.ndarray:
    """Probability vectors from normalized gamma draws.

    Each row normalizes m independent Gamma(a, beta) variates. The scale
    beta multiplies the standard draws explicitly, so reusing a stream
    across different beta values yields identical vectors up to rounding.
    """
    if a <= 0 or beta <= 0:
        raise InputError("gamma shape and scale must be positive")
    if m < 2:
        raise InputError("need at least 2 cells")
    if count <= 0:
        raise InputError("count must be positive")
    rng = stream.generator()
    g = rng.standard_gamma(a, size=(count, m)) * beta
    return g / g.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class MarginalCheck:
    """Agreement of one sampled coordinate with its Beta(a, (m-1)a) law."""

    beta_scale: float
    sample_mean: float
    sample_var: float
    analytic_mean: float
    analytic_var: float
    mean_tolerance: float
    var_tolerance: float
    mean_ok: bool
    var_ok: bool
    ks_statistic: float
    ks_critical: float
    ks_ok: bool


@dataclass(frozen=True)
class EquivalenceReport:
    """Scale invariance of normalized gamma vectors, with error bars.

    checks: per-scale marginal comparisons (independent streams).
    exact_invariance_sup: sup-norm difference of vectors built from one
        shared stream across all scales; zero up to rounding.
    """

    a: float
    m: int
    count: int
    checks: tuple
    exact_invariance_sup: float
    all_ok: bool


def _beta_var(a: float, b: float) -> float:
    return a * b / ((a + b) ** 2 * (a + b + 1.0))


def _beta_central_moment4(a: float, b: float) -> float:
    """Fourth central moment of Beta(a, b) via the excess-kurtosis formula."""
    s = a + b
    var = _beta_var(a, b)
    kurt_excess = (6.0 * ((a - b) ** 2 * (s + 1.0) - a * b * (s + 2.0))
                   / (a * b * (s + 2.0) * (s + 3.0)))
    return (kurt_excess + 3.0) * var ** 2


def dirichlet_equivalence_report(a: float, m: int, count: int, betas,
                                 stream: RandomStream) -> EquivalenceReport:
    """Check that normalized gamma vectors follow the symmetric Dirichlet
    law regardless of the gamma scale.

    For each scale (on its own substream) the first coordinate is tested
    against Beta(a, (m-1)a): mean and variance within 4 standard errors,
    and a Kolmogorov-Smirnov distance under the 1% critical value. A
    separate pass reuses one substream across all scales and reports the
    sup-norm difference of the resulting vectors, which exposes the exact
    algebraic invariance.
    """
    scales = [float(b) for b in betas]
    if len(scales) == 0 or any(b <= 0 for b in scales):
        raise InputError("betas must be positive scale factors")
    alpha_rest = (m - 1) * a
    an_mean = a / (a + alpha_rest)
    an_var = _beta_var(a, alpha_rest)
    mu4 = _beta_central_moment4(a, alpha_rest)
    se_mean = math.sqrt(an_var / count)
    se_var = math.sqrt(
        max(mu4 - an_var ** 2 * (count - 3) / (count - 1), 0.0) / count
    )
    ks_crit = float(kolmogi(0.01)) / math.sqrt(count)

    checks = []
    for j, b in enumerate(scales):
        rng = stream.substream(j)
        g = rng.standard_gamma(a, size=(count, m)) * b
        theta = g / g.sum(axis=1, keepdims=True)
        coord = np.sort(theta[:, 0])
        smean = float(coord.mean())
        svar = float(coord.var(ddof=1))
        cdf = betainc(a, alpha_rest, coord)
        grid_hi = np.arange(1, count + 1) / count
        grid_lo = np.arange(0, count) / count
        ks = float(max(np.max(cdf - grid_lo), np.max(grid_hi - cdf)))
        checks.append(MarginalCheck(
            beta_scale=b,
            sample_mean=smean,
            sample_var=svar,
            analytic_mean=an_mean,
            analytic_var=an_var,
            mean_tolerance=4.0 * se_mean,
            var_tolerance=4.0 * se_var,
            mean_ok=abs(smean - an_mean) <= 4.0 * se_mean,
            var_ok=abs(svar - an_var) <= 4.0 * se_var,
            ks_statistic=ks,
            ks_critical=ks_crit,
            ks_ok=ks < ks_crit,
        ))

    shared = stream.substream(len(scales)).standard_gamma(a, size=(count, m))
    base = shared / shared.sum(axis=1, keepdims=True)
    sup = 0.0
    for b in scales:
        scaled = (shared * b)
        theta_b = scaled / scaled.sum(axis=1, keepdims=True)
        sup = max(sup, float(np.max(np.abs(theta_b - base))))

    all_ok = all(c.mean_ok and c.var_ok and c.ks_ok for c in checks)
    return EquivalenceReport(
        a=a, m=m, count=count,
        checks=tuple(checks),
        exact_invariance_sup=sup,
        all_ok=all_ok,
    )


@dataclass(frozen=True)
class OrderedCellRow:
    """One cell of the ordered stick-breaking diagnostics table."""

    k: int
    analytic_mean: float
    empirical_mean: float
    empirical_median: float


@dataclass(frozen=True)
class OrderedDiagnostics:
    """Sampling diagnostics for the ordered stick-breaking prior.

    rows: per-cell means and medians with the analytic overlay
        E[theta_k] = 2^-k (last cell 2^-(m-1)).
    k_star: first index whose empirical mean drops below 1/m; reported,
        not analytically resolved.
    """

    m: int
    count: int
    rows: tuple
    k_star: int
    mean_sum: float


def ordered_prior_diagnostics(m: int, count: int,
                              stream: RandomStream) -> OrderedDiagnostics:
    """Sample the ordered prior built from Beta(1/2, 1/2) stick fractions.

    Cell means halve with the index under this construction; the table
    pairs empirical means and medians with that overlay and reports where
    the means cross the uniform level 1/m.
    """
    if m < 2:
        raise InputError("need at least 2 cells")
    if count <= 0:
        raise InputError("count must be positive")
    rng = stream.generator()
    xi = rng.beta(0.5, 0.5, size=(count, m - 1))
    # beta() can return exact 0.0 or 1.0 in rare underflow corners; nudge
    # into the open interval so the stick construction stays valid
    tiny = np.finfo(float).tiny
    xi = np.clip(xi, tiny, 1.0 - 2.2e-16)
    theta = _stick_break_rows(xi)
    means = theta.mean(axis=0)
    medians = np.median(theta, axis=0)
    analytic = np.array([2.0 ** -(k + 1) for k in range(m - 1)] + [2.0 ** -(m - 1)])
    rows = tuple(
        OrderedCellRow(
            k=k + 1,
            analytic_mean=float(analytic[k]),
            empirical_mean=float(means[k]),
            empirical_median=float(medians[k]),
        )
        for k in range(m)
    )
    below = np.nonzero(means < 1.0 / m)[0]
    k_star = int(below[0]) + 1 if len(below) else m + 1
    return OrderedDiagnostics(
        m=m, count=count, rows=rows, k_star=k_star,
        mean_sum=float(means.sum()),
    )
