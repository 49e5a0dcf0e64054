"""Hierarchical shrinkage for multinomial tables with many empty cells.

The model: counts follow a multinomial over m cells whose probability
vector carries a symmetric Dirichlet(a) prior; the concentration is
re-expressed through the total v = m*a, which stays interpretable as m
grows. The Dirichlet-multinomial marginal gives the likelihood in a (or
v); a hyperprior over v yields a posterior whose propriety is never
assumed, only verified. Reference analysis fixes a = 1/2 (cell posterior
weights n_i + 1/2), and the comparison table puts that, a fixed small a,
and the hierarchical treatment side by side.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincinv, gammaln

from . import density as dens
from .density import GridDensity, log_interp, read_density
from .errors import InputError, NumericalError
from .quadrature import (DEFAULT_TOL, QuadratureResult, integrate, mode,
                         normalize, quantile)
from .util import thread_cap

V_GRID_LO = 1e-4
V_GRID_HI = 1e4
V_GRID_NODES = 2049

HYPER_KINDS = ("flat-in-a", "flat-in-log-a", "pareto-v", "grid-file")


@dataclass(frozen=True)
class CountVector:
    """Observed multinomial counts.

    counts: per-cell nonnegative integers, at least 2 cells.
    Derived: m (cells), n (total), r0 (occupied cells).
    """

    counts: tuple

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 1 or len(arr) < 2:
            raise InputError("counts must be a vector with at least 2 cells")
        if np.any(arr != np.floor(arr)) or np.any(arr < 0):
            raise InputError("counts must be nonnegative integers")
        object.__setattr__(self, "counts", tuple(int(c) for c in arr))

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def r0(self) -> int:
        return sum(1 for c in self.counts if c > 0)


def canonical_counts(m: int, n: int, r0: int) -> CountVector:
    """The canonical count vector with totals (n, r0) on m cells.

    r0 - 1 singleton cells plus one cell holding n - r0 + 1; remaining
    cells empty. Everything downstream is permutation invariant, so the
    particular arrangement is cosmetic.
    """
    if m < 2:
        raise InputError("need at least 2 cells")
    if n < 0 or r0 < 0 or r0 > min(m, n):
        raise InputError("need 0 <= r0 <= min(m, n)")
    if n > 0 and r0 == 0:
        raise InputError("positive total requires at least one occupied cell")
    counts = [0] * m
    if n > 0:
        for i in range(r0 - 1):
            counts[i] = 1
        counts[r0 - 1] = n - r0 + 1
    return CountVector(tuple(counts))


def jeffreys_posterior(data: CountVector) -> np.ndarray:
    """Dirichlet parameters of the reference posterior: n_i + 1/2."""
    return np.asarray(data.counts, dtype=float) + 0.5


def cell_posterior_marginal(params, i: int):
    """Beta marginal (params[i], sum of the rest) of a Dirichlet posterior."""
    arr = np.asarray(params, dtype=float)
    if arr.ndim != 1 or len(arr) < 2:
        raise InputError("params must be a vector with at least 2 entries")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise InputError("Dirichlet parameters must be finite and positive")
    if not (0 <= i < len(arr)):
        raise InputError("cell index out of range")
    return float(arr[i]), float(arr.sum() - arr[i])


def dm_log_marginal(data: CountVector, a) -> np.ndarray | float:
    """Log marginal likelihood of the counts under a symmetric Dirichlet(a).

    Equals ln[Gamma(ma)/Gamma(ma+n) * prod_i Gamma(a+n_i)/Gamma(a)].
    The multinomial coefficient is omitted: it does not depend on a, so
    posterior computations over a are unaffected. Vectorized over a.
    """
    av = np.asarray(a, dtype=float)
    if np.any(av <= 0) or not np.all(np.isfinite(av)):
        raise InputError("concentration a must be finite and positive")
    m, n = data.m, data.n
    out = gammaln(m * av) - gammaln(m * av + n)
    # summing over occupied cells in sorted count order makes the result
    # bit-for-bit invariant under cell permutation, not just up to rounding
    for c in sorted(c for c in data.counts if c > 0):
        out = out + gammaln(av + c) - gammaln(av)
    return float(out) if np.isscalar(a) or av.ndim == 0 else out


@dataclass(frozen=True)
class HyperPriorSpec:
    """Hyperprior over the total concentration v = m*a.

    kind: "flat-in-a", "flat-in-log-a", "pareto-v" (density proportional
        to (1+v)^-2), or "grid-file" (tabulated density over v).
    a_max: optional domain truncation; the v-grid then stops at m*a_max
        and the support is declared bounded.
    path: density file for kind "grid-file".
    """

    kind: str
    a_max: float = None
    path: str = None

    def __post_init__(self):
        if self.kind not in HYPER_KINDS:
            raise InputError(
                f"unknown hyperprior kind {self.kind!r}; choose from {HYPER_KINDS}"
            )
        if self.a_max is not None and not (self.a_max > 0):
            raise InputError("a_max must be positive when given")
        if self.kind == "grid-file" and not self.path:
            raise InputError("grid-file hyperprior needs a path")


def _log_hyper_in_v(spec: HyperPriorSpec, v: np.ndarray) -> np.ndarray:
    """Log hyperprior density expressed in v (up to a constant).

    flat-in-a is flat in v as well (the Jacobian of v = m*a is constant).
    """
    if spec.kind == "flat-in-a":
        return np.zeros_like(v)
    if spec.kind == "flat-in-log-a":
        return -np.log(v)
    if spec.kind == "pareto-v":
        return -2.0 * np.log1p(v)
    table = read_density(spec.path)
    return log_interp(table, v)


def _v_grid_density(data: CountVector, hyper: HyperPriorSpec,
                    grid_spec=None) -> GridDensity:
    """Unnormalized v-posterior kernel on the standard v-grid.

    Untruncated hyperpriors live on the open half-line (0, inf) with the
    compactifying map, so tail impropriety is detected from the fitted
    tail exponent rather than hidden by the node range. An a_max
    truncation declares a bounded support instead.
    """
    lo, hi, n = V_GRID_LO, V_GRID_HI, V_GRID_NODES
    if grid_spec is not None:
        lo, hi, n = float(grid_spec[0]), float(grid_spec[1]), int(grid_spec[2])
    m = data.m

    def lp(v):
        return _log_hyper_in_v(hyper, v) + dm_log_marginal(data, v / m)

    if hyper.a_max is not None:
        v_hi = m * hyper.a_max
        nodes = np.geomspace(lo, v_hi * (1.0 - 1e-10), n)
        return GridDensity(0.0, v_hi, nodes, lp(nodes))
    return dens.halfline_density(lp, scale=1.0, n=n, lo_frac=lo, hi_frac=hi)


@dataclass(frozen=True)
class VPosterior:
    """Posterior of the total concentration v.

    density: normalized when proper, the raw kernel otherwise.
    mass: quadrature result for the kernel's total mass.
    proper: the verdict; summaries exist only when True.
    summary: dict with mode, median, mean, q05, q95 (None if improper).
    """

    density: GridDensity
    mass: QuadratureResult
    proper: bool
    summary: dict = None


def v_posterior(data: CountVector, hyper: HyperPriorSpec,
                grid_spec=None, tolerance: float = DEFAULT_TOL) -> VPosterior:
    """Posterior of v given the counts under the chosen hyperprior.

    An improper posterior (diverging normalizer) is a reported finding:
    the raw kernel comes back with proper=False and no summaries.
    """
    kernel = _v_grid_density(data, hyper, grid_spec)
    res = integrate(kernel, tolerance)
    if res.diverged or not (res.value > 0) or not res.converged:
        note = res.detail or "mass estimate did not converge"
        return VPosterior(
            density=kernel.with_log_values(kernel.log_values,
                                           note="improper or unresolved: " + note),
            mass=res,
            proper=False,
        )
    posterior = normalize(kernel, tolerance)
    mean_res = integrate(
        posterior.with_log_values(posterior.log_values + np.log(posterior.nodes)),
        tolerance,
    )
    summary = {
        "mode": mode(posterior),
        "median": quantile(posterior, 0.5),
        "mean": mean_res.value,
        "q05": quantile(posterior, 0.05),
        "q95": quantile(posterior, 0.95),
    }
    return VPosterior(density=posterior, mass=res, proper=True, summary=summary)


def v_summary_table(configs, hyper: HyperPriorSpec,
                    tolerance: float = DEFAULT_TOL) -> list:
    """Summary rows for a sweep of (m, n, r0) configurations.

    Rows keep the input order; work is parallelized across configurations
    (thread count capped by PRIOR_FORGE_THREADS) without affecting output.
    """
    cfgs = [(int(m), int(n), int(r0)) for (m, n, r0) in configs]

    def one(cfg):
        m, n, r0 = cfg
        vp = v_posterior(canonical_counts(m, n, r0), hyper, tolerance=tolerance)
        row = {
            "m": m, "n": n, "r0": r0,
            "hyperprior": hyper.kind,
            "proper": vp.proper,
        }
        for key in ("mode", "median", "mean", "q05", "q95"):
            row[f"{key}_v"] = vp.summary[key] if vp.proper else None
        return row

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        return list(pool.map(one, cfgs))


def _beta_mean_interval(a: float, b: float, level: float = 0.95):
    lo = betaincinv(a, b, (1.0 - level) / 2.0)
    hi = betaincinv(a, b, 1.0 - (1.0 - level) / 2.0)
    return a / (a + b), float(lo), float(hi)


def _hier_cell_mean(data: CountVector, cell_count: int,
                    posterior: GridDensity, tolerance: float) -> float:
    """E[(n_i + a)/(n + v)] over the v-posterior, with a = v/m."""
    v = posterior.nodes
    ratio = (cell_count + v / data.m) / (data.n + v)
    res = integrate(
        posterior.with_log_values(posterior.log_values + np.log(ratio)),
        tolerance,
    )
    return res.value


def _trapezoid_weights(posterior: GridDensity) -> np.ndarray:
    g = np.exp(posterior.log_values)
    w = np.zeros_like(g)
    cell = 0.5 * (g[1:] + g[:-1]) * np.diff(posterior.nodes)
    w[:-1] += 0.5 * cell
    w[1:] += 0.5 * cell
    total = w.sum()
    if not (total > 0):
        raise NumericalError("v-posterior mass vanished on the grid")
    return w / total


def _hier_cell_interval(data: CountVector, cell_count: int,
                        posterior: GridDensity, level: float = 0.95):
    """Central interval of the mixture-of-Beta cell posterior.

    The v-posterior is discretized to trapezoid weights; the mixture CDF
    F(x) = sum_k w_k BetaCDF(x; n_i + a_k, n + v_k - n_i - a_k) is then
    inverted by bisection.
    """
    w = _trapezoid_weights(posterior)
    v = posterior.nodes
    a_cell = cell_count + v / data.m
    b_cell = data.n + v - a_cell

    def cdf(x):
        return float(np.sum(w * betainc(a_cell, b_cell, x)))

    def invert(q):
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    tail = (1.0 - level) / 2.0
    return invert(tail), invert(1.0 - tail)


def compare_priors(data: CountVector, hyper: HyperPriorSpec,
                   a_point: float = None,
                   tolerance: float = DEFAULT_TOL) -> list:
    """Cell-probability summaries under three priors, as table rows.

    One representative occupied cell and one empty cell (when present)
    are summarized under (i) the reference posterior a = 1/2, (ii) the
    conditional posterior at the fixed a_point (default 1/m), and
    (iii) the hierarchical posterior integrating a = v/m over the
    v-posterior. Hierarchical columns are None when the v-posterior is
    improper.
    """
    if a_point is None:
        a_point = 1.0 / data.m
    if not (a_point > 0):
        raise InputError("a_point must be positive")
    counts = np.asarray(data.counts)
    cells = []
    occupied = np.nonzero(counts > 0)[0]
    empty = np.nonzero(counts == 0)[0]
    if len(occupied):
        cells.append(("observed", int(occupied[0])))
    if len(empty):
        cells.append(("unobserved", int(empty[0])))

    vp = v_posterior(data, hyper, tolerance=tolerance)
    rows = []
    for kind, idx in cells:
        c = int(counts[idx])
        row = {"cell": kind, "count": c}
        jp = jeffreys_posterior(data)
        a_j, b_j = cell_posterior_marginal(jp, idx)
        row["jeffreys_mean"], row["jeffreys_lo"], row["jeffreys_hi"] = \
            _beta_mean_interval(a_j, b_j)
        cond = counts.astype(float) + a_point
        a_c, b_c = cell_posterior_marginal(cond, idx)
        row["conditional_mean"], row["conditional_lo"], row["conditional_hi"] = \
            _beta_mean_interval(a_c, b_c)
        if vp.proper:
            row["hierarchical_mean"] = _hier_cell_mean(data, c, vp.density,
                                                       tolerance)
            lo, hi = _hier_cell_interval(data, c, vp.density)
            row["hierarchical_lo"], row["hierarchical_hi"] = lo, hi
        else:
            row["hierarchical_mean"] = None
            row["hierarchical_lo"] = None
            row["hierarchical_hi"] = None
        rows.append(row)
    return rows


def large_m_stability(data_template, m_values, hyper: HyperPriorSpec,
                      tolerance: float = DEFAULT_TOL) -> dict:
    """Sup-norm drift of the v-posterior as the cell count m grows.

    data_template is (n, r0); each m uses the canonical counts. All
    posteriors share the standard v-grid, so densities are compared
    node-wise. Requires m >= 10*n throughout (the sparse regime where the
    v-parameterization is the stable one).
    """
    n, r0 = int(data_template[0]), int(data_template[1])
    ms = [int(m) for m in m_values]
    if len(ms) < 2:
        raise InputError("need at least two m values to compare")
    if any(m < 10 * n for m in ms):
        raise InputError("large-m comparison requires every m >= 10*n")

    def one(m):
        vp = v_posterior(canonical_counts(m, n, r0), hyper, tolerance=tolerance)
        if not vp.proper:
            raise NumericalError(
                f"v-posterior improper at m={m}; cannot compare densities"
            )
        return np.exp(vp.density.log_values)

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        densities = list(pool.map(one, ms))
    distances = [
        float(np.max(np.abs(densities[i + 1] - densities[i])))
        for i in range(len(densities) - 1)
    ]
    return {
        "m_values": ms,
        "distances": distances,
        "decreasing": all(
            distances[i + 1] < distances[i] for i in range(len(distances) - 1)
        ),
    }
