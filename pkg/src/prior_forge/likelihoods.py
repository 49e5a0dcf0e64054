"""Likelihood kernels evaluated on parameter grids.

All families return log-likelihood kernels: constant data-dependent
factors (binomial coefficients, factorials, powers of 2*pi) are dropped.
Propriety verdicts and ratio-style bounds are unaffected because those
constants scale every integral identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class LikelihoodModel:
    """A univariate log-likelihood kernel over a parameter domain.

    family: one of "normal-location", "binomial", "poisson",
        "multinomial", "grid".
    data: the observed data in family-specific form.
    domain_lo / domain_hi: the parameter domain the kernel is defined on.
    """

    family: str
    data: tuple
    domain_lo: float
    domain_hi: float
    table_nodes: np.ndarray = None
    table_log_values: np.ndarray = None

    def log_on(self, theta) -> np.ndarray:
        """Log-likelihood kernel at parameter values theta."""
        x = np.asarray(theta, dtype=float)
        if self.family == "normal-location":
            obs = np.asarray(self.data, dtype=float)
            return -0.5 * np.sum((x[..., None] - obs[None, :]) ** 2, axis=-1)
        if self.family in ("binomial", "multinomial"):
            k, n = self.data
            out = np.zeros_like(x)
            if k > 0:
                out = out + k * np.log(x)
            if n - k > 0:
                out = out + (n - k) * np.log1p(-x)
            return out
        if self.family == "poisson":
            total, n_obs = self.data
            out = -float(n_obs) * x
            if total > 0:
                out = out + float(total) * np.log(x)
            return out
        if self.family == "grid":
            return np.interp(x, self.table_nodes, self.table_log_values,
                             left=-math.inf, right=-math.inf)
        raise InputError(f"unknown likelihood family {self.family!r}")

    def contains(self, lo: float, hi: float) -> bool:
        """Whether [lo, hi] lies inside this kernel's parameter domain."""
        return self.domain_lo <= lo and hi <= self.domain_hi


def normal_location(observations) -> LikelihoodModel:
    """Normal likelihood with unit variance and unknown location.

    observations: one or more real data points.
    """
    obs = np.atleast_1d(np.asarray(observations, dtype=float))
    if obs.ndim != 1 or len(obs) == 0 or not np.all(np.isfinite(obs)):
        raise InputError("observations must be a nonempty vector of finite reals")
    return LikelihoodModel("normal-location", tuple(float(v) for v in obs),
                           -math.inf, math.inf)


def binomial_counts(successes: int, trials: int) -> LikelihoodModel:
    """Binomial likelihood kernel for the success probability on (0, 1)."""
    k, n = int(successes), int(trials)
    if n < 1 or not (0 <= k <= n):
        raise InputError("need 0 <= successes <= trials with trials >= 1")
    return LikelihoodModel("binomial", (k, n), 0.0, 1.0)


def poisson_counts(counts) -> LikelihoodModel:
    """Poisson likelihood kernel for the rate on (0, inf)."""
    arr = np.atleast_1d(np.asarray(counts))
    if len(arr) == 0 or np.any(arr != np.floor(arr)) or np.any(arr < 0):
        raise InputError("counts must be nonnegative integers")
    total = int(arr.sum())
    return LikelihoodModel("poisson", (total, len(arr)), 0.0, math.inf)


def multinomial_counts(counts) -> LikelihoodModel:
    """Multinomial likelihood kernel, two-cell form.

    The propriety machinery is univariate, so only the two-cell case
    (equivalent to a binomial in the first cell's probability) is
    supported; larger tables are rejected.
    """
    arr = np.atleast_1d(np.asarray(counts))
    if len(arr) != 2:
        raise InputError(
            "multinomial likelihoods support exactly 2 cells here; the "
            "parameter grid is univariate"
        )
    if np.any(arr != np.floor(arr)) or np.any(arr < 0) or arr.sum() < 1:
        raise InputError("counts must be nonnegative integers with a positive total")
    k, n = int(arr[0]), int(arr.sum())
    return LikelihoodModel("multinomial", (k, n), 0.0, 1.0)


def tabulated_likelihood(nodes, log_values, domain_lo: float,
                         domain_hi: float) -> LikelihoodModel:
    """Likelihood kernel given by a table, interpolated linearly in the
    log; -inf outside the tabulated range."""
    x = np.asarray(nodes, dtype=float)
    lv = np.asarray(log_values, dtype=float)
    if x.ndim != 1 or len(x) != len(lv) or len(x) < 2:
        raise InputError("need matching 1-D node and value arrays, length >= 2")
    if np.any(np.diff(x) <= 0):
        raise InputError("table nodes must be strictly increasing")
    if np.any(np.isnan(lv)) or np.any(lv == np.inf):
        raise InputError("table log values must not contain NaN or +inf")
    x = x.copy()
    lv = lv.copy()
    x.setflags(write=False)
    lv.setflags(write=False)
    return LikelihoodModel("grid", (), float(domain_lo), float(domain_hi),
                           table_nodes=x, table_log_values=lv)
