"""Posterior propriety checks and integral inequalities for pooled priors.

posterior_mass integrates prior times likelihood kernel over the
parameter domain. holder_check tests the interpolation inequality
  integral(mu^alpha * nu^(1-alpha) * L) <= (integral(mu L))^alpha * (integral(nu L))^(1-alpha)
with quadrature error bars: an apparent violation inside the error bars
is reported as inconclusive, never as a counterexample. pooled_propriety
bounds the posterior mass of a geometric pool by the weighted geometric
mean of the component posterior masses, which is finite whenever every
component posterior is proper.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .density import GridDensity
from .errors import InputError, NumericalError
from .likelihoods import LikelihoodModel
from .pooling import PoolProblem, _weighted_log_sum
from .quadrature import DEFAULT_TOL, QuadratureResult, integrate


@dataclass(frozen=True)
class ProprietyVerdict:
    """Whether a posterior kernel has finite positive mass.

    mass: the quadrature result for the posterior integral.
    proper: True only when the integral converged to a finite positive
        value. An improper or non-convergent posterior is a meaningful
        finding, not an error.
    diagnostics: short human-readable explanation.
    """

    mass: QuadratureResult
    proper: bool
    diagnostics: str


def _posterior_density(prior: GridDensity, likelihood: LikelihoodModel) -> GridDensity:
    if not likelihood.contains(prior.domain_lo, prior.domain_hi):
        raise InputError(
            "prior support is not contained in the likelihood's parameter "
            f"domain [{likelihood.domain_lo}, {likelihood.domain_hi}]"
        )
    log_like = likelihood.log_on(prior.nodes)
    return prior.with_log_values(prior.log_values + log_like)


def posterior_mass(prior: GridDensity, likelihood: LikelihoodModel,
                   tolerance: float = DEFAULT_TOL) -> ProprietyVerdict:
    """Integrate prior times likelihood kernel and classify the result."""
    post = _posterior_density(prior, likelihood)
    res = integrate(post, tolerance)
    if res.diverged:
        return ProprietyVerdict(res, False,
                                "posterior mass diverges: " + res.detail)
    if not (res.value > 0):
        return ProprietyVerdict(res, False, "posterior mass is zero on the grid")
    if not res.converged:
        return ProprietyVerdict(
            res, False,
            "posterior mass finite but the estimate did not reach the "
            f"requested tolerance (relative error ~{res.abs_error_estimate / res.value:.1e})",
        )
    return ProprietyVerdict(res, True, "finite positive posterior mass")


@dataclass(frozen=True)
class HolderReport:
    """Outcome of the interpolation-inequality check.

    holds: lhs <= rhs within combined quadrature error.
    inconclusive: lhs exceeded rhs but by less than the combined error,
        so no violation can be claimed.
    """

    lhs: float
    rhs: float
    lhs_error: float
    rhs_error: float
    holds: bool
    inconclusive: bool
    alpha: float
    mu_mass: ProprietyVerdict
    nu_mass: ProprietyVerdict


def holder_check(mu: GridDensity, nu: GridDensity, alpha: float,
                 likelihood: LikelihoodModel,
                 tolerance: float = DEFAULT_TOL) -> HolderReport:
    """Check the two-density interpolation inequality under a likelihood.

    Preconditions: both posterior masses must be proper (the inequality's
    right side is otherwise meaningless); violation of either raises an
    input error naming the failing prior. alpha lies in [0, 1]; the
    endpoints reduce to trivial equality.
    """
    if not (0.0 <= alpha <= 1.0):
        raise InputError("alpha must lie in [0, 1]")
    if not mu.same_grid(nu):
        raise InputError("mu and nu must share a grid")
    mu_verdict = posterior_mass(mu, likelihood, tolerance)
    if not mu_verdict.proper:
        raise InputError(
            "holder_check precondition failed: posterior under mu is not "
            "proper (" + mu_verdict.diagnostics + ")"
        )
    nu_verdict = posterior_mass(nu, likelihood, tolerance)
    if not nu_verdict.proper:
        raise InputError(
            "holder_check precondition failed: posterior under nu is not "
            "proper (" + nu_verdict.diagnostics + ")"
        )

    log_like = likelihood.log_on(mu.nodes)
    parts = [log_like]
    if alpha > 0.0:
        parts.append(alpha * mu.log_values)
    if alpha < 1.0:
        parts.append((1.0 - alpha) * nu.log_values)
    blend = parts[0]
    for p in parts[1:]:
        blend = blend + p
    lhs_res = integrate(mu.with_log_values(blend), tolerance)
    if lhs_res.diverged:
        # mathematically impossible under the preconditions; numerical
        # misclassification must fail loudly
        raise NumericalError(
            "interpolated posterior mass classified divergent although both "
            "hypothesis posteriors are proper: " + lhs_res.detail
        )
    lhs = lhs_res.value
    lhs_err = lhs_res.abs_error_estimate

    i_mu, i_nu = mu_verdict.mass, nu_verdict.mass
    log_rhs = alpha * i_mu.log_value + (1.0 - alpha) * i_nu.log_value
    rhs = math.exp(log_rhs)
    rhs_err = rhs * (
        alpha * i_mu.abs_error_estimate / i_mu.value
        + (1.0 - alpha) * i_nu.abs_error_estimate / i_nu.value
    )
    # a few ulps of slack on top of the quadrature errors: at the alpha
    # endpoints both sides are the same integral reached through different
    # arithmetic, and pure rounding must not read as a violation
    budget = lhs_err + rhs_err + 8.0 * sys.float_info.epsilon * max(lhs, rhs)
    holds = lhs <= rhs + budget
    inconclusive = holds and lhs > rhs
    return HolderReport(
        lhs=lhs, rhs=rhs, lhs_error=lhs_err, rhs_error=rhs_err,
        holds=holds, inconclusive=inconclusive, alpha=alpha,
        mu_mass=mu_verdict, nu_mass=nu_verdict,
    )


@dataclass(frozen=True)
class PooledProprietyReport:
    """Posterior propriety of a geometric pool with its mass bound.

    bound is the weighted geometric mean of component posterior masses;
    the pooled posterior mass can never exceed it (up to quadrature
    error), which is what makes propriety of the pool automatic.
    """

    pooled_mass: QuadratureResult
    bound: float
    bound_error: float
    component_masses: tuple
    proper: bool
    bound_satisfied: bool


def pooled_propriety(problem: PoolProblem, likelihood: LikelihoodModel,
                     tolerance: float = DEFAULT_TOL) -> PooledProprietyReport:
    """Verify the pooled posterior is proper and within its mass bound.

    Preconditions: every positively weighted component must have a proper
    posterior; the offending component is named otherwise. The pooled
    kernel is used unnormalized (the bound is stated for raw components).
    """
    al = problem.weights.alphas
    verdicts = []
    for i, (a, comp) in enumerate(zip(al, problem.components)):
        if a == 0.0:
            verdicts.append(None)
            continue
        verdict = posterior_mass(comp, likelihood, tolerance)
        if not verdict.proper:
            raise InputError(
                f"pooled_propriety precondition failed: component {i} has an "
                "improper posterior (" + verdict.diagnostics + ")"
            )
        verdicts.append(verdict)

    log_bound = 0.0
    rel_err = 0.0
    for a, verdict in zip(al, verdicts):
        if verdict is None:
            continue
        log_bound += a * verdict.mass.log_value
        rel_err += a * verdict.mass.abs_error_estimate / verdict.mass.value
    bound = math.exp(log_bound)
    bound_err = bound * rel_err

    pooled_kernel = problem.grid.with_log_values(_weighted_log_sum(problem))
    log_like = likelihood.log_on(pooled_kernel.nodes)
    pooled_post = pooled_kernel.with_log_values(
        pooled_kernel.log_values + log_like
    )
    res = integrate(pooled_post, tolerance)
    if res.diverged:
        raise NumericalError(
            "pooled posterior classified divergent although every component "
            "posterior is proper; this is an internal inconsistency: "
            + res.detail
        )
    proper = res.converged and res.value > 0
    bound_ok = res.value <= bound + bound_err + res.abs_error_estimate
    return PooledProprietyReport(
        pooled_mass=res,
        bound=bound,
        bound_error=bound_err,
        component_masses=tuple(verdicts),
        proper=proper,
        bound_satisfied=bound_ok,
    )
