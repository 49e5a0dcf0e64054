"""Command-line interface.

Subcommands: pool, holder, sparse-mn, compare, poisson-equiv, ordered-mn.
Every subcommand takes --seed, --tol, --out, and --format; the full
effective configuration (defaults included) is echoed into the output
header so results are self-describing. Output files are written
atomically. Exit codes: 0 success (improper or inconclusive findings are
still success), 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import density as dens
from .density import GridDensity, read_density, write_density
from .errors import InputError, NumericalError, PriorForgeError
from .likelihoods import (binomial_counts, multinomial_counts,
                          normal_location, poisson_counts,
                          tabulated_likelihood)
from .pooling import (PoolProblem, PoolWeights, arithmetic_pool,
                      equal_weights, geometric_pool)
from .propriety import holder_check
from .reparam import dirichlet_equivalence_report, ordered_prior_diagnostics
from .sparse_multinomial import (CountVector, HyperPriorSpec,
                                 canonical_counts, compare_priors,
                                 v_summary_table)
from .special import log_beta, log_gamma
from .streams import RandomStream
from .util import thread_cap, write_text_atomic


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits with code 1 on bad arguments."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value == math.inf:
            return "inf"
        if value == -math.inf:
            return "-inf"
        return format(value, ".17g")
    return str(value)


def _config_line(config: dict) -> str:
    parts = [f"{k}={_fmt(v)}" for k, v in config.items()]
    return "# config: " + " ".join(parts)


def _emit_table(rows, columns, config, extra_comments=()):
    """Render rows as CSV: config echo comment, optional extra comments,
    header line, then data rows at 17 significant digits."""
    lines = [_config_line(config)]
    for comment in extra_comments:
        lines.append(f"# {comment}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _emit_json(payload: dict) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not JSON serializable: {type(o)}")

    return json.dumps(payload, indent=2, default=default) + "\n"


def _write_out(text: str, out_path):
    if out_path:
        write_text_atomic(out_path, text)
    else:
        sys.stdout.write(text)


def _parse_kv_spec(spec: str):
    """Parse 'family:key=value,key=value' density/component specs."""
    family, _, rest = spec.partition(":")
    family = family.strip()
    params = {}
    if rest:
        if family == "grid-file" and "=" not in rest:
            params["path"] = rest
        else:
            for item in rest.split(","):
                if "=" not in item:
                    raise InputError(f"malformed spec item {item!r} in {spec!r}")
                key, _, value = item.partition("=")
                params[key.strip()] = value.strip()
    return family, params


def _spec_float(params, key, spec):
    if key not in params:
        raise InputError(f"spec {spec!r} is missing {key!r}")
    try:
        return float(params[key])
    except ValueError as exc:
        raise InputError(f"spec {spec!r}: {key} must be a number") from exc


def _component_recipe(family: str, params: dict, spec_label: str):
    """(domain, log-pdf callable, normalized flag) for an analytic family."""
    if family == "beta":
        a = _spec_float(params, "a", spec_label)
        b = _spec_float(params, "b", spec_label)
        if a <= 0 or b <= 0:
            raise InputError(f"{spec_label}: beta parameters must be positive")
        const = log_beta(a, b)
        return ((0.0, 1.0),
                lambda x: (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - const,
                True)
    if family == "gamma":
        shape = _spec_float(params, "shape", spec_label)
        scale = float(params.get("scale", 1.0))
        if shape <= 0 or scale <= 0:
            raise InputError(f"{spec_label}: gamma shape and scale must be positive")
        const = log_gamma(shape) + shape * math.log(scale)
        return ((0.0, math.inf),
                lambda x: (shape - 1.0) * np.log(x) - x / scale - const,
                True)
    if family == "normal":
        mean = float(params.get("mean", 0.0))
        sd = float(params.get("sd", 1.0))
        if sd <= 0:
            raise InputError(f"{spec_label}: sd must be positive")
        const = math.log(sd) + 0.5 * math.log(2.0 * math.pi)
        return ((-math.inf, math.inf),
                lambda x: -0.5 * ((x - mean) / sd) ** 2 - const,
                True)
    if family == "flat":
        lo = float(params.get("lo", "-inf"))
        hi = float(params.get("hi", "inf"))
        if not lo < hi:
            raise InputError(f"{spec_label}: need lo < hi")
        if math.isfinite(lo) and math.isfinite(hi):
            height = -math.log(hi - lo)
            return ((lo, hi), lambda x: np.full_like(x, height), True)
        return ((lo, hi), lambda x: np.zeros_like(x), False)
    if family == "exp-tilt":
        b = _spec_float(params, "b", spec_label)
        return ((-math.inf, math.inf), lambda x: b * x, False)
    raise InputError(f"unknown density family {family!r} in {spec_label}")


def _build_components(specs: list) -> list:
    """Tabulate component densities on one shared grid.

    All components must declare the same support. When grid files are
    present the first file's grid is the shared one; otherwise the
    default grid for the common domain type is built once and every
    analytic family is tabulated on it.
    """
    parsed = []
    for i, spec in enumerate(specs):
        if isinstance(spec, str):
            family, params = _parse_kv_spec(spec)
            label = spec
        else:
            family = spec.get("family")
            params = {k: v for k, v in spec.items() if k != "family"}
            label = f"component {i}"
        parsed.append((family, params, label))

    files = []
    recipes = []
    for family, params, label in parsed:
        if family == "grid-file":
            path = params.get("path")
            if not path:
                raise InputError(f"{label}: grid-file needs a path")
            files.append((read_density(path), label))
            recipes.append(None)
        else:
            recipes.append(_component_recipe(family, params, label))

    domains = [(d.domain_lo, d.domain_hi) for d, _ in files]
    domains += [r[0] for r in recipes if r is not None]
    if len(set(domains)) != 1:
        raise InputError(
            "all pool components must share one support; got "
            + ", ".join(sorted({f"[{lo}, {hi}]" for lo, hi in set(domains)}))
        )
    lo, hi = domains[0]

    if files:
        template = files[0][0]
        for d, label in files[1:]:
            if not template.same_grid(d):
                raise InputError(f"{label}: grid differs from the first grid file")
    elif math.isfinite(lo) and math.isfinite(hi):
        template = dens.bounded_density(lambda x: np.zeros_like(x), lo, hi)
    elif math.isfinite(lo):
        template = dens.halfline_density(lambda x: np.zeros_like(x), shift=lo)
    else:
        template = dens.realline_density(lambda x: np.zeros_like(x))

    out = []
    file_iter = iter(files)
    for recipe in recipes:
        if recipe is None:
            out.append(next(file_iter)[0])
        else:
            _, log_pdf, normalized = recipe
            out.append(template.with_log_values(log_pdf(template.nodes),
                                                normalized=normalized))
    return out


def _parse_likelihood(name: str, data: str):
    if name == "normal":
        obs = [float(v) for v in data.split(",")]
        return normal_location(obs)
    if name == "binomial":
        parts = data.split(",")
        if len(parts) != 2:
            raise InputError("binomial data must be 'successes,trials'")
        return binomial_counts(int(parts[0]), int(parts[1]))
    if name == "poisson":
        return poisson_counts([int(v) for v in data.split(",")])
    if name == "multinomial":
        return multinomial_counts([int(v) for v in data.split(",")])
    if name == "grid-file":
        table = read_density(data)
        return tabulated_likelihood(table.nodes, table.log_values,
                                    table.domain_lo, table.domain_hi)
    raise InputError(f"unknown likelihood family {name!r}")


def _effective_config(args, command, extras=None):
    config = {
        "command": command,
        "seed": args.seed,
        "tol": args.tol,
        "format": args.format,
        "threads": thread_cap(),
    }
    if extras:
        config.update(extras)
    return config


def _input_name(path):
    """File-argument form for the config echo: base name only, so output
    bytes do not depend on where the caller keeps the input file."""
    return os.path.basename(path) if path else path


def _hyper_from_args(args) -> HyperPriorSpec:
    return HyperPriorSpec(
        kind=args.hyperprior,
        a_max=args.a_max,
        path=getattr(args, "hyper_file", None),
    )


def _counts_from_args(args) -> CountVector:
    if getattr(args, "counts", None):
        return CountVector(tuple(int(v) for v in args.counts.split(",")))
    missing = [name for name in ("m", "n", "r0") if getattr(args, name) is None]
    if missing:
        raise InputError(
            "provide either --counts or all of --m/--n/--r0 (missing: "
            + ", ".join("--" + v for v in missing) + ")"
        )
    return canonical_counts(args.m, args.n, args.r0)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_pool(args) -> int:
    with open(args.spec) as fh:
        spec = json.load(fh)
    if "components" not in spec or not spec["components"]:
        raise InputError("pool spec must list at least one component")
    components = _build_components(spec["components"])
    if "weights" in spec:
        weights = PoolWeights(np.asarray(spec["weights"], dtype=float))
    else:
        weights = equal_weights(len(components))
    problem = PoolProblem(tuple(components), weights)
    pooled = geometric_pool(problem, args.tol) if args.kind == "geometric" \
        else arithmetic_pool(problem)
    config = _effective_config(args, "pool", {
        "spec": _input_name(args.spec), "kind": args.kind,
        "weights": ",".join(_fmt(float(w)) for w in weights.alphas),
    })
    if args.format == "json":
        payload = {
            "config": config,
            "domain_lo": pooled.domain_lo,
            "domain_hi": pooled.domain_hi,
            "normalized": pooled.normalized,
            "note": pooled.note,
            "nodes": pooled.nodes,
            "log_values": pooled.log_values,
        }
        _write_out(_emit_json(payload), args.out)
    else:
        extra = [_config_line(config).lstrip("# ")]
        if pooled.note:
            extra.append(f"note: {pooled.note}")
        if args.out:
            write_density(pooled, args.out, extra_header=extra)
        else:
            rows = [{"abscissa": float(x), "log_density": float(lv)}
                    for x, lv in zip(pooled.nodes, pooled.log_values)]
            comments = [f"domain={_fmt(pooled.domain_lo)},{_fmt(pooled.domain_hi)} "
                        f"normalized={1 if pooled.normalized else 0}"]
            if pooled.note:
                comments.append(f"note: {pooled.note}")
            text = _emit_table(rows, ["abscissa", "log_density"], config,
                               extra_comments=comments)
            _write_out(text, None)
    return 0


def _cmd_holder(args) -> int:
    mu_family, mu_params = _parse_kv_spec(args.mu)
    nu_family, nu_params = _parse_kv_spec(args.nu)
    components = _build_components([
        {"family": mu_family, **mu_params},
        {"family": nu_family, **nu_params},
    ])
    likelihood = _parse_likelihood(args.likelihood, args.data)
    report = holder_check(components[0], components[1], args.alpha,
                          likelihood, args.tol)
    config = _effective_config(args, "holder", {
        "mu": args.mu, "nu": args.nu, "alpha": args.alpha,
        "likelihood": args.likelihood, "data": args.data,
    })
    row = {
        "lhs": report.lhs, "rhs": report.rhs,
        "lhs_error": report.lhs_error, "rhs_error": report.rhs_error,
        "holds": report.holds, "inconclusive": report.inconclusive,
        "mu_posterior_mass": report.mu_mass.mass.value,
        "nu_posterior_mass": report.nu_mass.mass.value,
    }
    if args.format == "json":
        _write_out(_emit_json({"config": config, **row}), args.out)
    else:
        _write_out(_emit_table([row], list(row.keys()), config), args.out)
    if not report.holds:
        raise NumericalError(
            "interpolation inequality violated beyond quadrature error; "
            "this indicates an internal numerical fault"
        )
    return 0


def _cmd_sparse_mn(args) -> int:
    hyper = _hyper_from_args(args)
    if args.configs:
        with open(args.configs) as fh:
            sweep = json.load(fh)
        configs = [(c["m"], c["n"], c["r0"]) for c in sweep]
    else:
        data = _counts_from_args(args)
        configs = [(data.m, data.n, data.r0)]
        if args.counts:
            rows = _v_rows_for_counts(data, hyper, args.tol)
            return _finish_sparse(args, hyper, rows)
    rows = v_summary_table(configs, hyper, tolerance=args.tol)
    return _finish_sparse(args, hyper, rows)


def _v_rows_for_counts(data, hyper, tol):
    from .sparse_multinomial import v_posterior

    vp = v_posterior(data, hyper, tolerance=tol)
    row = {
        "m": data.m, "n": data.n, "r0": data.r0,
        "hyperprior": hyper.kind, "proper": vp.proper,
    }
    for key in ("mode", "median", "mean", "q05", "q95"):
        row[f"{key}_v"] = vp.summary[key] if vp.proper else None
    return [row]


def _finish_sparse(args, hyper, rows) -> int:
    config = _effective_config(args, "sparse-mn", {
        "hyperprior": hyper.kind,
        "a_max": hyper.a_max,
        "hyper_file": _input_name(hyper.path),
        "configs": _input_name(args.configs),
    })
    columns = ["m", "n", "r0", "hyperprior", "proper",
               "mode_v", "median_v", "mean_v", "q05_v", "q95_v"]
    if args.format == "json":
        _write_out(_emit_json({"config": config, "rows": rows}), args.out)
    else:
        _write_out(_emit_table(rows, columns, config), args.out)
    return 0


def _cmd_compare(args) -> int:
    data = _counts_from_args(args)
    hyper = _hyper_from_args(args)
    a_point = args.a_point if args.a_point is not None else 1.0 / data.m
    rows = compare_priors(data, hyper, a_point, tolerance=args.tol)
    config = _effective_config(args, "compare", {
        "m": data.m, "n": data.n, "r0": data.r0,
        "hyperprior": hyper.kind, "a_point": a_point,
    })
    columns = ["cell", "count",
               "jeffreys_mean", "jeffreys_lo", "jeffreys_hi",
               "conditional_mean", "conditional_lo", "conditional_hi",
               "hierarchical_mean", "hierarchical_lo", "hierarchical_hi"]
    if args.format == "json":
        _write_out(_emit_json({"config": config, "rows": rows}), args.out)
    else:
        _write_out(_emit_table(rows, columns, config), args.out)
    return 0


def _cmd_poisson_equiv(args) -> int:
    betas = [float(v) for v in args.betas.split(",")]
    stream = RandomStream(args.seed, 0)
    report = dirichlet_equivalence_report(args.a, args.m, args.count, betas,
                                          stream)
    config = _effective_config(args, "poisson-equiv", {
        "a": args.a, "m": args.m, "count": args.count, "betas": args.betas,
    })
    rows = [
        {
            "beta_scale": c.beta_scale,
            "sample_mean": c.sample_mean, "analytic_mean": c.analytic_mean,
            "mean_tolerance": c.mean_tolerance, "mean_ok": c.mean_ok,
            "sample_var": c.sample_var, "analytic_var": c.analytic_var,
            "var_tolerance": c.var_tolerance, "var_ok": c.var_ok,
            "ks_statistic": c.ks_statistic, "ks_critical": c.ks_critical,
            "ks_ok": c.ks_ok,
        }
        for c in report.checks
    ]
    columns = list(rows[0].keys())
    extras = [f"exact_invariance_sup={_fmt(report.exact_invariance_sup)}",
              f"all_ok={_fmt(report.all_ok)}"]
    if args.format == "json":
        payload = {"config": config,
                   "exact_invariance_sup": report.exact_invariance_sup,
                   "all_ok": report.all_ok, "rows": rows}
        _write_out(_emit_json(payload), args.out)
    else:
        _write_out(_emit_table(rows, columns, config, extra_comments=extras),
                   args.out)
    return 0


def _cmd_ordered_mn(args) -> int:
    stream = RandomStream(args.seed, 0)
    report = ordered_prior_diagnostics(args.m, args.count, stream)
    config = _effective_config(args, "ordered-mn", {
        "m": args.m, "count": args.count,
    })
    rows = [
        {
            "k": r.k,
            "analytic_mean": r.analytic_mean,
            "empirical_mean": r.empirical_mean,
            "empirical_median": r.empirical_median,
        }
        for r in report.rows
    ]
    extras = [f"k_star={report.k_star}", f"mean_sum={_fmt(report.mean_sum)}"]
    if args.format == "json":
        payload = {"config": config, "k_star": report.k_star,
                   "mean_sum": report.mean_sum, "rows": rows}
        _write_out(_emit_json(payload), args.out)
    else:
        _write_out(_emit_table(
            rows, ["k", "analytic_mean", "empirical_mean", "empirical_median"],
            config, extra_comments=extras), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="master seed for all randomized work (default 0)")
    common.add_argument("--tol", type=float, default=1e-8,
                        help="relative quadrature tolerance (default 1e-8)")
    common.add_argument("--out", default=None,
                        help="output file (atomic write); stdout when omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format (default csv)")

    parser = _Parser(prog="prior-forge",
                     description="pool priors, check propriety, summarize "
                                 "sparse multinomial posteriors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", parents=[common],
                       help="pool component densities from a JSON spec")
    p.add_argument("--spec", required=True, help="JSON file with components and weights")
    p.add_argument("--kind", choices=("geometric", "arithmetic"),
                   default="geometric")
    p.set_defaults(handler=_cmd_pool)

    p = sub.add_parser("holder", parents=[common],
                       help="interpolation-inequality check for two priors")
    p.add_argument("--mu", required=True, help="density spec, e.g. beta:a=0.5,b=0.5")
    p.add_argument("--nu", required=True, help="density spec, e.g. exp-tilt:b=1")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--likelihood", required=True,
                   choices=("normal", "binomial", "poisson", "multinomial",
                            "grid-file"))
    p.add_argument("--data", required=True,
                   help="comma-separated data (or a file path for grid-file)")
    p.set_defaults(handler=_cmd_holder)

    def add_count_args(p, with_configs):
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--r0", type=int, default=None)
        p.add_argument("--counts", default=None,
                       help="explicit comma-separated cell counts")
        p.add_argument("--hyperprior", default="pareto-v",
                       choices=("pareto-v", "flat-in-a", "flat-in-log-a",
                                "grid-file"))
        p.add_argument("--a-max", type=float, default=None, dest="a_max")
        p.add_argument("--hyper-file", default=None, dest="hyper_file",
                       help="density file for --hyperprior grid-file")
        if with_configs:
            p.add_argument("--configs", default=None,
                           help="JSON list of {m,n,r0} sweep configurations")

    p = sub.add_parser("sparse-mn", parents=[common],
                       help="v-posterior summaries for sparse count tables")
    add_count_args(p, with_configs=True)
    p.set_defaults(handler=_cmd_sparse_mn)

    p = sub.add_parser("compare", parents=[common],
                       help="cell-probability table: reference, fixed-a, hierarchical")
    add_count_args(p, with_configs=False)
    p.add_argument("--a-point", type=float, default=None, dest="a_point",
                   help="fixed concentration for the conditional column "
                        "(default 1/m)")
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("poisson-equiv", parents=[common],
                       help="normalized-gamma vs Dirichlet equivalence report")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--count", type=int, default=100000)
    p.add_argument("--betas", default="0.1,1,10")
    p.set_defaults(handler=_cmd_poisson_equiv)

    p = sub.add_parser("ordered-mn", parents=[common],
                       help="ordered stick-breaking prior diagnostics")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--count", type=int, default=100000)
    p.set_defaults(handler=_cmd_ordered_mn)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.handler(args)
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except (InputError, OSError, ValueError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except PriorForgeError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
