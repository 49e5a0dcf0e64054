"""Grid-backed one-dimensional densities.

A GridDensity stores log-density values on a strictly increasing abscissa
grid together with the declared support. Unbounded supports carry a smooth
compactifying map (half-line: s = (x-lo)/(c+x-lo); real line: arctangent)
so that tail mass can be integrated and tail divergence detected from the
node pattern near the mapped endpoints. Bounded supports use the identity
map.

Densities are immutable; transforms return new instances sharing the grid.
The `normalized` flag certifies unit mass under this package's quadrature
(see quadrature.normalize).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .special import log_beta, log_gamma

MIN_NODES = 16

# relative offset used when default grids avoid declared endpoint
# singularities on bounded intervals
EDGE_OFFSET = 1e-10


@dataclass(frozen=True)
class GridDensity:
    """Log-density tabulated on a grid over a declared support.

    domain_lo / domain_hi: support endpoints; -inf / +inf allowed.
    nodes: strictly increasing abscissae inside the open support.
    log_values: log density at the nodes; -inf marks zeros, +inf and NaN
        are rejected.
    normalized: True when the density integrates to 1 under the package
        quadrature (within the tolerance normalize() was called with).
    t_nodes / t_lo / t_hi / log_jacobian: the compactified integration
        variable, its endpoint values, and log dx/dt at the nodes.
    note: free-form annotation (e.g. impropriety warnings from pooling).
    """

    domain_lo: float
    domain_hi: float
    nodes: np.ndarray
    log_values: np.ndarray
    normalized: bool = False
    t_nodes: np.ndarray = None
    t_lo: float = math.nan
    t_hi: float = math.nan
    log_jacobian: np.ndarray = None
    note: str = ""

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        lv = np.asarray(self.log_values, dtype=float)
        if nodes.ndim != 1 or lv.ndim != 1 or len(nodes) != len(lv):
            raise InputError("nodes and log_values must be 1-D arrays of equal length")
        if len(nodes) < MIN_NODES:
            raise InputError(f"grid needs at least {MIN_NODES} nodes, got {len(nodes)}")
        if not np.all(np.isfinite(nodes)):
            raise InputError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise InputError("grid nodes must be strictly increasing")
        if np.any(np.isnan(lv)) or np.any(lv == np.inf):
            raise InputError("log_values must not contain NaN or +inf")
        lo, hi = float(self.domain_lo), float(self.domain_hi)
        if not lo < hi:
            raise InputError("domain_lo must be less than domain_hi")
        if nodes[0] < lo or nodes[-1] > hi:
            raise InputError("grid nodes must lie inside the declared domain")
        object.__setattr__(self, "domain_lo", lo)
        object.__setattr__(self, "domain_hi", hi)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "log_values", lv)
        if self.t_nodes is None:
            t, t_lo, t_hi, logjac = _derive_map(nodes, lo, hi)
            object.__setattr__(self, "t_nodes", t)
            object.__setattr__(self, "t_lo", t_lo)
            object.__setattr__(self, "t_hi", t_hi)
            object.__setattr__(self, "log_jacobian", logjac)
        else:
            t = np.asarray(self.t_nodes, dtype=float)
            logjac = np.asarray(self.log_jacobian, dtype=float)
            if len(t) != len(nodes) or len(logjac) != len(nodes):
                raise InputError("map arrays must match the grid length")
            if np.any(np.diff(t) <= 0):
                raise InputError("map abscissae must be strictly increasing")
            if not (self.t_lo <= t[0] and t[-1] <= self.t_hi):
                raise InputError("map abscissae must lie inside [t_lo, t_hi]")
            object.__setattr__(self, "t_nodes", t)
            object.__setattr__(self, "log_jacobian", logjac)
        for arr in (self.nodes, self.log_values, self.t_nodes, self.log_jacobian):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def same_grid(self, other: "GridDensity") -> bool:
        """True when both densities share domain and abscissae exactly."""
        return (
            self.domain_lo == other.domain_lo
            and self.domain_hi == other.domain_hi
            and len(self.nodes) == len(other.nodes)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.t_nodes, other.t_nodes)
        )

    def with_log_values(self, log_values, *, normalized=False, note="") -> "GridDensity":
        """New density on the same grid and map with replaced log values."""
        lv = np.asarray(log_values, dtype=float)
        return replace(self, log_values=lv, normalized=normalized, note=note)

    def shifted(self, offset: float, *, normalized=False, note="") -> "GridDensity":
        """New density with a constant added to the log values."""
        return self.with_log_values(
            self.log_values + float(offset), normalized=normalized, note=note
        )


def _derive_map(nodes, lo, hi):
    """Compactifying map for a node set over the declared domain.

    Bounded domains use the identity. Half-lines map onto (0, 1) via
    s = y/(c+y) with y the distance from the finite endpoint and c a
    characteristic scale taken from the nodes. The real line maps through
    a scaled arctangent.
    """
    if math.isfinite(lo) and math.isfinite(hi):
        return nodes.copy(), lo, hi, np.zeros_like(nodes)
    if math.isfinite(lo) and hi == math.inf:
        y = nodes - lo
        c = float(np.median(y))
        s = y / (c + y)
        logjac = math.log(c) - 2.0 * np.log1p(-s)
        return s, 0.0, 1.0, logjac
    if lo == -math.inf and math.isfinite(hi):
        y = hi - nodes
        c = float(np.median(y))
        s = -y / (c + y)
        logjac = math.log(c) - 2.0 * np.log1p(s)
        return s, -1.0, 0.0, logjac
    if lo == -math.inf and hi == math.inf:
        center = float(np.median(nodes))
        q1, q3 = np.quantile(nodes, [0.25, 0.75])
        c = max(float(q3 - q1) / 2.0, 1e-6)
        u = np.arctan((nodes - center) / c) / math.pi + 0.5
        logjac = math.log(c * math.pi) - 2.0 * np.log(np.cos(math.pi * (u - 0.5)))
        return u, 0.0, 1.0, logjac
    raise InputError("unsupported domain specification")


# ---------------------------------------------------------------------------
# default grid layouts


def bounded_nodes(lo: float, hi: float, n: int = 4097, edge_cells: int = 384,
                  zone_frac: float = 1.0 / 32.0) -> np.ndarray:
    """Default abscissae for a bounded support.

    Uniform core plus geometrically refined zones over the outer
    `zone_frac` of each side, reaching down to an offset of 1e-10 times
    the span. The refinement keeps endpoint-singular kernels (Beta with
    parameters below 1) integrable to tight tolerance; smooth densities
    are unaffected.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InputError("bounded_nodes requires finite lo < hi")
    if n < MIN_NODES:
        raise InputError(f"need at least {MIN_NODES} nodes")
    span = hi - lo
    off = EDGE_OFFSET * span
    n_core = n - 2 * edge_cells
    if n_core < 8:
        raise InputError("node budget too small for the requested edge refinement")
    zone = zone_frac * span
    core = np.linspace(lo + zone, hi - zone, n_core)
    left = np.geomspace(off, zone, edge_cells + 1)[:-1]
    return np.concatenate([lo + left, core, hi - left[::-1]])


def halfline_density(log_pdf, scale: float = 1.0, n: int = 4097, *,
                     lo_frac: float = 1e-10, hi_frac: float = 1e4,
                     shift: float = 0.0, normalized: bool = False,
                     note: str = "") -> GridDensity:
    """Density on (shift, inf) tabulated from a log-pdf callable.

    Nodes are log-spaced over [lo_frac, hi_frac] times `scale` (a
    characteristic scale of the density, e.g. the gamma scale parameter).
    The default 4097 nodes give the log-resolution the quadrature needs
    for gamma-type kernels at 1e-8 relative accuracy.
    """
    if scale <= 0:
        raise InputError("scale must be positive")
    y = np.geomspace(lo_frac * scale, hi_frac * scale, n)
    s = y / (scale + y)
    logjac = math.log(scale) - 2.0 * np.log1p(-s)
    x = shift + y
    lv = np.asarray(log_pdf(x), dtype=float)
    return GridDensity(shift, math.inf, x, lv, normalized=normalized,
                       t_nodes=s, t_lo=0.0, t_hi=1.0, log_jacobian=logjac,
                       note=note)


def realline_density(log_pdf, center: float = 0.0, scale: float = 4.0,
                     n: int = 2049, *, normalized: bool = False,
                     note: str = "") -> GridDensity:
    """Density on the whole real line tabulated from a log-pdf callable.

    Nodes come from a uniform grid in the arctangent variable
    u = atan((x-center)/scale)/pi + 1/2, offset by 1e-10 from both ends.
    """
    if scale <= 0:
        raise InputError("scale must be positive")
    u = np.linspace(1e-10, 1.0 - 1e-10, n)
    x = center + scale * np.tan(math.pi * (u - 0.5))
    logjac = math.log(scale * math.pi) - 2.0 * np.log(np.abs(np.cos(math.pi * (u - 0.5))))
    lv = np.asarray(log_pdf(x), dtype=float)
    return GridDensity(-math.inf, math.inf, x, lv, normalized=normalized,
                       t_nodes=u, t_lo=0.0, t_hi=1.0, log_jacobian=logjac,
                       note=note)


def bounded_density(log_pdf, lo: float, hi: float, n: int = 4097, *,
                    normalized: bool = False, note: str = "") -> GridDensity:
    """Density on a bounded support tabulated from a log-pdf callable."""
    x = bounded_nodes(lo, hi, n)
    lv = np.asarray(log_pdf(x), dtype=float)
    return GridDensity(lo, hi, x, lv, normalized=normalized, note=note)


# ---------------------------------------------------------------------------
# standard kernels


def beta_density(a: float, b: float, n: int = 4097) -> GridDensity:
    """Normalized Beta(a, b) density on (0, 1)."""
    if a <= 0 or b <= 0:
        raise InputError("beta parameters must be positive")
    const = log_beta(a, b)

    def lp(x):
        return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - const

    return bounded_density(lp, 0.0, 1.0, n, normalized=True)


def gamma_density(shape: float, scale: float = 1.0, n: int = 4097) -> GridDensity:
    """Normalized Gamma density on (0, inf), shape-scale convention."""
    if shape <= 0 or scale <= 0:
        raise InputError("gamma shape and scale must be positive")
    const = log_gamma(shape) + shape * math.log(scale)

    def lp(x):
        return (shape - 1.0) * np.log(x) - x / scale - const

    return halfline_density(lp, scale=scale, n=n, normalized=True)


def normal_density(mean: float = 0.0, sd: float = 1.0, n: int = 2049) -> GridDensity:
    """Normalized normal density on the real line."""
    if sd <= 0:
        raise InputError("sd must be positive")
    const = math.log(sd) + 0.5 * math.log(2.0 * math.pi)

    def lp(x):
        return -0.5 * ((x - mean) / sd) ** 2 - const

    return realline_density(lp, center=mean, scale=4.0 * sd, n=n, normalized=True)


def flat_density(lo: float, hi: float, n: int = 4097) -> GridDensity:
    """Normalized uniform density on a bounded interval."""
    height = -math.log(hi - lo)
    return bounded_density(lambda x: np.full_like(x, height), lo, hi, n,
                           normalized=True)


def improper_flat(domain_lo: float, domain_hi: float, n: int = None) -> GridDensity:
    """Constant log-density 0 on the declared support; not normalizable
    when the support is unbounded."""
    if math.isfinite(domain_lo) and math.isfinite(domain_hi):
        return bounded_density(lambda x: np.zeros_like(x), domain_lo, domain_hi,
                               n or 4097)
    if math.isfinite(domain_lo) and domain_hi == math.inf:
        return halfline_density(lambda x: np.zeros_like(x), shift=domain_lo,
                                n=n or 4097)
    if domain_lo == -math.inf and domain_hi == math.inf:
        return realline_density(lambda x: np.zeros_like(x), n=n or 2049)
    raise InputError("unsupported domain for a flat density")


def exp_tilt_density(b: float, n: int = 2049) -> GridDensity:
    """Improper density proportional to exp(b*x) on the real line."""
    return realline_density(lambda x: b * x, n=n)


# ---------------------------------------------------------------------------
# pointwise evaluation


def log_interp(density: GridDensity, x) -> np.ndarray:
    """Linear interpolation of the log density at abscissae x.

    Points outside the tabulated node range evaluate to -inf (the density
    is treated as unsupported there). Useful for file-backed densities
    consumed at arbitrary points.
    """
    xq = np.asarray(x, dtype=float)
    out = np.interp(xq, density.nodes, density.log_values,
                    left=-math.inf, right=-math.inf)
    return out


# ---------------------------------------------------------------------------
# CSV persistence


def _fmt(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return format(x, ".17g")


def write_density(density: GridDensity, path: str, extra_header=()) -> None:
    """Write a density to CSV.

    First line is the fixed header
    `# domain=<lo>,<hi> normalized=<0|1>`; optional extra header lines
    follow as additional comments; then one `abscissa,log_density` row per
    node. The write is atomic (temp file + rename).
    """
    lines = [
        f"# domain={_fmt(density.domain_lo)},{_fmt(density.domain_hi)} "
        f"normalized={1 if density.normalized else 0}"
    ]
    for extra in extra_header:
        lines.append(f"# {extra}")
    for x, lv in zip(density.nodes, density.log_values):
        lines.append(f"{_fmt(float(x))},{_fmt(float(lv))}")
    payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_density(path: str) -> GridDensity:
    """Read a density written by write_density.

    Rejects missing or malformed headers and non-monotone abscissae.
    Extra comment lines after the header are ignored.
    """
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise InputError(f"{path}: empty density file")
    header = raw[0].strip()
    if not header.startswith("#"):
        raise InputError(f"{path}: missing header line")
    fields = header.lstrip("#").split()
    meta = {}
    for field in fields:
        if "=" not in field:
            raise InputError(f"{path}: malformed header field {field!r}")
        key, _, value = field.partition("=")
        meta[key] = value
    if "domain" not in meta or "normalized" not in meta:
        raise InputError(f"{path}: header must declare domain and normalized")
    try:
        lo_s, hi_s = meta["domain"].split(",")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError as exc:
        raise InputError(f"{path}: bad domain in header") from exc
    if meta["normalized"] not in ("0", "1"):
        raise InputError(f"{path}: normalized flag must be 0 or 1")
    normalized = meta["normalized"] == "1"
    xs, lvs = [], []
    for lineno, line in enumerate(raw[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected two comma-separated columns")
        try:
            xs.append(float(parts[0]))
            lvs.append(float(parts[1]))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric row") from exc
    nodes = np.asarray(xs)
    if len(nodes) >= 2 and np.any(np.diff(nodes) <= 0):
        raise InputError(f"{path}: abscissae must be strictly increasing")
    return GridDensity(lo, hi, nodes, np.asarray(lvs), normalized=normalized)
