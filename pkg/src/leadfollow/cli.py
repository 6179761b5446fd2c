"""Command-line interface.

Subcommands::

    variance     variance field by closed form, Lyapunov solve or simulation
    crosscheck   compare the three methods on one lattice
    reproduce    regenerate the data behind the figures and the 3D table
    scaling      convergence tables, sandwich bounds and fits as JSON
    random-walk  empirical vs analytic return probabilities

Exit status: 0 success, 2 guard violation or bad arguments, 3 validation
failure, 4 I/O error.  Output never contains timestamps, so identical
invocations give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .closedform import FIELD_LIMIT, diagonal_variances, variance_field
from .combinatorics import return_prob_series
from .lattice import LatticeSpec, build_laplacian
from .lyapunov import LYAPUNOV_LIMIT, solve_triangular_lyapunov, variance_diagonal
from .scaling import (
    LOG_RATE_2D,
    fit_scaling,
    increment_exponent_3d,
    limit_check_1d,
    log_law_offsets_2d,
    pyramid_limit_3d,
    pyramid_slice_bound_3d,
    sandwich_reports_2d,
    sandwich_reports_3d,
    table_structure,
    undirected_reference_1d,
)
from .simulate import WORK_LIMIT, DEFAULT_SEED, SimulationConfig, simulate_lattice, simulate_random_walk_returns

EXIT_OK = 0
EXIT_GUARD = 2
EXIT_VALIDATION = 3
EXIT_IO = 4

FORMATS = ("csv", "json", "tsv-pgf")
TARGETS = ("fig2", "fig3", "fig4-left", "fig4-right", "fig5-table1")
TARGET_FILES = {
    "fig2": "OneDimVn.txt",
    "fig3": "TwoDimField.txt",
    "fig4-left": "TwoDimVn.txt",
    "fig4-right": "TwoDimTotalVn.txt",
    "fig5-table1": "ThreeDimDiagFaceN15.txt",
}
SCALING_BUDGET = {1: 10**6, 2: 10**4, 3: 10**3}
SCALING_MINIMUM = {1: 10, 2: 7, 3: 12}
CROSSCHECK_LIMIT = 1000
Z_LIMIT = 4.0
Z_FRACTION = 0.95
LOG_FIT_RANGE = (5, 50)


class GuardError(Exception):
    """A request exceeded a documented size or budget limit."""


class Table:
    """Column names, rows and metadata for one output file."""

    def __init__(self, columns, rows, metadata=None, fixed=False):
        self.columns = list(columns)
        self.rows = rows
        self.metadata = metadata or {}
        # fixed: format floats with a fixed number of decimals instead of significant digits
        self.fixed = fixed


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def _fmt(value, precision, fixed=False):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{precision}f}" if fixed else f"{value:.{precision}g}"


def _json_value(value, precision, fixed=False):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(_fmt(value, precision, fixed))
    if isinstance(value, dict):
        return {str(k): _json_value(v, precision, fixed) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_value(v, precision, fixed) for v in value]
    return value


def dumps_json(obj, precision):
    return json.dumps(_json_value(obj, precision), sort_keys=True, indent=2) + "\n"


def render(table, fmt, precision):
    if fmt == "json":
        obj = {
            "columns": table.columns,
            "metadata": table.metadata,
            "rows": [[_json_value(v, precision, table.fixed) for v in row] for row in table.rows],
        }
        return json.dumps(_json_value(obj, precision), sort_keys=True, indent=2) + "\n"
    cells = [[_fmt(v, precision, table.fixed) for v in row] for row in table.rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(cells)
        return buf.getvalue()
    lines = [" ".join(table.columns)] + [" ".join(r) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(text, out, default_name=None):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = out
    if os.path.isdir(out):
        if default_name is None:
            raise IsADirectoryError(out)
        path = os.path.join(out, default_name)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _metadata(command, **extra):
    return {"command": command, "package": "leadfollow", "version": __version__, **extra}


# ---------------------------------------------------------------------------
# variance
# ---------------------------------------------------------------------------


def _coordinate_columns(dim):
    return ["n", "m", "l"][:dim]


def _simulation_config(args, dim):
    base = SimulationConfig.default(dim, seed=args.seed)
    return SimulationConfig(
        dt=args.dt if args.dt is not None else base.dt,
        horizon=args.horizon if args.horizon is not None else base.horizon,
        burn_in=args.burn_in if args.burn_in is not None else base.burn_in,
        ensemble=args.ensemble if args.ensemble is not None else base.ensemble,
        seed=args.seed,
    )


def _check_simulation(spec, config):
    if config.dt > 0.1 / spec.dimension:
        raise GuardError(f"dt = {config.dt} exceeds the stability limit 0.1/D = {0.1 / spec.dimension}")
    work = spec.size * config.ensemble * config.steps
    if work > WORK_LIMIT:
        raise GuardError(f"simulation work {work} exceeds the budget of {WORK_LIMIT}")


def _check_lyapunov(spec, limit=LYAPUNOV_LIMIT):
    if spec.size > limit:
        raise GuardError(f"{spec.size} states exceed the Lyapunov state-count limit of {limit}")


def _check_field(spec):
    if spec.size > FIELD_LIMIT:
        raise GuardError(f"{spec.size} states exceed the closed-form field limit of {FIELD_LIMIT}")


def cmd_variance(args):
    spec = LatticeSpec(args.dim, args.side)
    meta = _metadata("variance", dimension=spec.dimension, side=spec.side, method=args.method)
    se = None
    if args.method == "closedform":
        _check_field(spec)
        mode = "exact" if args.exact else "auto"
        field = variance_field(spec, mode=mode)
        meta["exact"] = bool(args.exact)
    elif args.method == "lyapunov":
        _check_lyapunov(spec)
        lap = build_laplacian(spec)
        P = solve_triangular_lyapunov(lap)
        field = variance_diagonal(P)
        meta["residual"] = P.residual(lap)
    else:
        config = _simulation_config(args, spec.dimension)
        _check_simulation(spec, config)
        est = simulate_lattice(spec, config)
        field, se = est.mean, est.standard_error
        meta.update(seed=config.seed, dt=config.dt, horizon=config.horizon,
                    burn_in=config.burn_in, ensemble=config.ensemble)

    if args.export_laplacian:
        build_laplacian(spec).export_coo(args.export_laplacian)

    columns = _coordinate_columns(spec.dimension) + ["variance"]
    rows = []
    se_flat = None if se is None else se.flat()
    for k, (coord, value) in enumerate(field.items()):
        row = list(coord) + [value]
        if se_flat is not None:
            row.append(se_flat[k])
        rows.append(row)
    if se is not None:
        columns.append("std_error")
    _emit(render(Table(columns, rows, meta), args.format, args.precision), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# crosscheck
# ---------------------------------------------------------------------------


def crosscheck(spec, tolerance=1e-9, seed=DEFAULT_SEED, simulate=True):
    """Run the method comparisons and return a JSON-ready report."""
    _check_lyapunov(spec, CROSSCHECK_LIMIT)
    coords = [tuple(int(c) for c in row) for row in spec.coordinates()]
    cf = variance_field(spec, mode="float").flat()
    lap = build_laplacian(spec)
    ly = variance_diagonal(solve_triangular_lyapunov(lap)).flat()
    dev = np.abs(cf - ly)
    worst = int(np.argmax(dev))
    report = {
        "dimension": spec.dimension,
        "side": spec.side,
        "closedform_vs_lyapunov": {
            "max_abs_deviation": float(dev[worst]),
            "worst_coordinate": list(coords[worst]),
            "tolerance": tolerance,
            "pass": bool(dev[worst] <= tolerance),
        },
    }
    if simulate:
        config = SimulationConfig.default(spec.dimension, seed=seed)
        _check_simulation(spec, config)
        est = simulate_lattice(spec, config)
        z = np.abs(est.z_scores(cf.reshape(spec.shape))).reshape(-1)
        worst = int(np.argmax(z))
        within = float(np.mean(z <= Z_LIMIT))
        report["closedform_vs_simulate"] = {
            "max_abs_deviation": float(np.max(np.abs(est.mean.flat() - cf))),
            "max_abs_z": float(z[worst]),
            "worst_coordinate": list(coords[worst]),
            "fraction_within": within,
            "z_limit": Z_LIMIT,
            "required_fraction": Z_FRACTION,
            "seed": seed,
            "pass": bool(within >= Z_FRACTION),
        }
    report["pass"] = all(v["pass"] for v in report.values() if isinstance(v, dict))
    return report


def cmd_crosscheck(args):
    spec = LatticeSpec(args.dim, args.side)
    report = crosscheck(spec, args.tolerance, args.seed, simulate=not args.skip_simulate)
    report["metadata"] = _metadata("crosscheck")
    _emit(dumps_json(report, args.precision), args.out)
    if not report["pass"]:
        for key, leg in report.items():
            if isinstance(leg, dict) and leg.get("pass") is False:
                print(f"{key} failed; worst coordinate {tuple(leg['worst_coordinate'])}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def _fig2():
    n = np.arange(1, 51)
    V = diagonal_variances(1, 50)
    ref = undirected_reference_1d(n)
    meta = _metadata("reproduce", target="fig2", sources={
        "V_directed": "closed form",
        "V_undirected_reference": "external reference series n/2, not derived here",
    })
    return Table(["n", "V_directed", "V_undirected_reference"],
                 [[int(k), v, r] for k, v, r in zip(n, V, ref)], meta)


def _fig3():
    field = variance_field(LatticeSpec(2, 50), mode="float")
    rows = [list(coord) + [value] for coord, value in field.items()]
    return Table(["n", "m", "V"], rows, _metadata("reproduce", target="fig3", side=50))


def _log_fit_table(target, name, index_name, values):
    n = np.arange(1, values.size + 1)
    fit = fit_scaling(n, values, "log_fit", fit_range=LOG_FIT_RANGE)
    meta = _metadata("reproduce", target=target, fit=fit.to_dict())
    rows = [[int(k), v, f] for k, v, f in zip(n, values, fit(n))]
    return Table([index_name, name, "logfit"], rows, meta)


def _fig4_left():
    return _log_fit_table("fig4-left", "Vn", "n", diagonal_variances(2, 50))


def _fig4_right():
    # normalised total along the diagonal: (1/N) sum_{n<=N} V_(n,n)
    V = diagonal_variances(2, 50)
    Pi = np.cumsum(V) / np.arange(1, 51)
    return _log_fit_table("fig4-right", "TotalVnNorm", "Nval", Pi)


def table1_matrix(side=15):
    """``V(n, n, m)`` for ``n, m = 1..side`` on the ``side**3`` lattice."""
    field = variance_field(LatticeSpec(3, side), mode="float")
    i = np.arange(side)
    return field.values[i, i, :]


def _fig5_table1():
    M = table1_matrix(15)
    meta = _metadata("reproduce", target="fig5-table1", side=15,
                     layout="rows n, columns m, entry V(n, n, m)", checks=table_structure(M))
    columns = ["n"] + [f"m{m}" for m in range(1, 16)]
    rows = [[n + 1] + list(M[n]) for n in range(15)]
    return Table(columns, rows, meta, fixed=True)


_BUILDERS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4-left": _fig4_left,
    "fig4-right": _fig4_right,
    "fig5-table1": _fig5_table1,
}


def reproduce(target):
    return _BUILDERS[target]()


def cmd_reproduce(args):
    targets = TARGETS if args.target == "all" else (args.target,)
    if len(targets) > 1 and args.out not in (None, "-") and not os.path.isdir(args.out):
        raise GuardError("target 'all' needs --out to name an existing directory")
    for target in targets:
        text = render(reproduce(target), args.format, args.precision)
        _emit(text, args.out, TARGET_FILES[target])
    return EXIT_OK


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------


def _sandwich_summary(reports):
    failing = [r.n for r in reports if not r.holds]
    return {
        "count": len(reports),
        "all_hold": not failing,
        "failing": failing,
        "reports": [r.to_dict() for r in reports if r.n <= 10 or r.n == reports[-1].n or r.n in failing[:5]],
    }


def scaling_report(dim, n_max):
    """Scaling tables and named boolean checks for one dimension."""
    if n_max > SCALING_BUDGET[dim]:
        raise GuardError(f"n_max = {n_max} exceeds the {dim}D budget of {SCALING_BUDGET[dim]}")
    if n_max < SCALING_MINIMUM[dim]:
        raise GuardError(f"n_max must be at least {SCALING_MINIMUM[dim]} in {dim}D")
    out = {"dimension": dim, "n_max": n_max}
    checks = {}
    if dim == 1:
        tables = limit_check_1d(n_max)
        V = diagonal_variances(1, n_max)
        n = np.arange(1, n_max + 1)
        out["tables"] = tables
        out["fits"] = {"power_fit": fit_scaling(n, V, "power_fit").to_dict()}
        checks["variance_monotone_after_100"] = tables["variance"]["monotone_after_100"]
        checks["normalized_total_monotone_after_100"] = tables["normalized_total"]["monotone_after_100"]
        if n_max >= 10**4:
            checks["final_variance_deviation_le_1e-4"] = tables["variance"]["rows"][-1][2] <= 1e-4
            checks["final_normalized_total_deviation_le_1e-4"] = tables["normalized_total"]["rows"][-1][2] <= 1e-4
    elif dim == 2:
        reports = sandwich_reports_2d(n_max)
        V = np.array([r.middle for r in reports])
        n = np.arange(1, n_max + 1)
        offsets = V - LOG_RATE_2D * np.log(n)
        out["sandwich"] = _sandwich_summary(reports)
        out["fits"] = {"log_fit": fit_scaling(n, V, "log_fit", (5, min(50, n_max))).to_dict()}
        out["log_law_offsets"] = {"min": float(offsets.min()), "max": float(offsets.max()),
                                  "last": float(offsets[-1])}
        checks["sandwich_holds"] = out["sandwich"]["all_hold"]
    else:
        V = diagonal_variances(3, n_max)
        lower2 = sandwich_reports_3d(n_max, upper="2n")
        lower3 = sandwich_reports_3d(n_max, upper="3n-2")
        inc = increment_exponent_3d((10, min(50, n_max)), V=V)
        limit = pyramid_limit_3d(max(2, n_max))
        p = np.arange(0, 201)
        G = return_prob_series(3, 200).values / 6.0
        bound = np.array([pyramid_slice_bound_3d(int(k)) for k in p])
        out["sandwich_2n"] = _sandwich_summary(lower2)
        out["sandwich_3n-2"] = _sandwich_summary(lower3)
        out["fits"] = {"increment_power_fit": inc.to_dict()}
        out["pyramid_limit"] = limit
        checks["sandwich_2n_holds"] = out["sandwich_2n"]["all_hold"]
        checks["sandwich_3n-2_holds"] = out["sandwich_3n-2"]["all_hold"]
        checks["increment_exponent_in_[-1.6,-1.4]"] = -1.6 <= inc.coefficients[1] <= -1.4
        checks["diagonal_increasing"] = bool(np.all(np.diff(V) > 0))
        checks["slice_bound_holds_p_le_200"] = bool(np.all(G <= bound * (1 + 1e-12)))
    out["checks"] = checks
    out["pass"] = all(checks.values())
    return out


def cmd_scaling(args):
    report = scaling_report(args.dim, args.n_max)
    report["metadata"] = _metadata("scaling")
    _emit(dumps_json(report, args.precision), args.out)
    if not report["pass"]:
        failed = [k for k, v in report["checks"].items() if not v]
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# random walk
# ---------------------------------------------------------------------------


def cmd_random_walk(args):
    if args.K < 0 or args.walks < 1:
        raise GuardError("need --K >= 0 and --walks >= 1")
    if args.walks * max(args.K, 1) * 2 > WORK_LIMIT:
        raise GuardError(f"walk work exceeds the budget of {WORK_LIMIT}")
    emp = simulate_random_walk_returns(args.dim, args.K, args.walks, seed=args.seed)
    ana = return_prob_series(args.dim, args.K).values
    sigma = np.sqrt(ana * (1.0 - ana) / args.walks)
    rows = [[k, e, a, s] for k, (e, a, s) in enumerate(zip(emp.values, ana, sigma))]
    meta = _metadata("random-walk", dimension=args.dim, K=args.K, walks=args.walks, seed=args.seed)
    _emit(render(Table(["k", "empirical", "analytic", "sigma"], rows, meta), args.format, args.precision),
          args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _precision(text):
    value = int(text)
    if not 2 <= value <= 17:
        raise argparse.ArgumentTypeError("precision must lie in 2..17")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _output_options(p, default_format="csv"):
    p.add_argument("--format", choices=FORMATS, default=default_format)
    p.add_argument("--out", default=None, help="output file or directory; stdout when omitted")
    p.add_argument("--precision", type=_precision, default=12, help="digits, 2..17 (default 12)")


def build_parser():
    parser = argparse.ArgumentParser(prog="leadfollow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("variance", help="per-follower steady-state variance")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--method", choices=("closedform", "lyapunov", "simulate"), default="closedform")
    p.add_argument("--exact", action="store_true", help="exact rationals (closedform only)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--ensemble", type=int)
    p.add_argument("--export-laplacian", metavar="PATH", help="write L as 1-based 'row col value' lines")
    _output_options(p)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("crosscheck", help="closed form vs Lyapunov vs simulation")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--skip-simulate", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--precision", type=_precision, default=12)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("reproduce", help="figure and table data files")
    p.add_argument("target", choices=TARGETS + ("all",))
    _output_options(p, default_format="tsv-pgf")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("scaling", help="asymptotic scaling checks (JSON)")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--precision", type=_precision, default=12)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("random-walk", help="empirical return probabilities")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--walks", type=int, default=10**5)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    _output_options(p)
    p.set_defaults(func=cmd_random_walk)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GuardError as exc:
        print(f"leadfollow: guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(f"leadfollow: invalid input: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"leadfollow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
