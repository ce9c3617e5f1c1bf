"""Command-line interface: ``expweibull {fit,shape,fisher,surface,simulate}``.

Every command prints one JSON document. Exit codes: 0 success, 1 usage
error, 2 data error, 3 non-convergence or numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .datasets import BUNDLED, apply_type2_censoring, bundled_path, load_csv, rate_to_r
from .exceptions import (
    DataError,
    DomainError,
    InvalidParameterError,
    NonConvergenceError,
    NumericalOverflowError,
    SingularInformationError,
)
from .fisher import asymptotic_ci, fisher_matrix, lrt_beta_equals_one
from .hazard_shape import DEFAULT_N_POINTS, shape_report, write_csv
from .likelihood import log_likelihood
from .mle import FitConfig, fit
from .simulation import run_simulation

SCHEMA_VERSION = "1.0"
DATA_DIR_ENV = "EXPWEIBULL_DATA_DIR"
DEFAULT_MAX_CELLS = 250_000

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {text}")
    return value


def _rate(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"censoring rate must lie in [0, 1), got {text}")
    return value


def _clean(obj):
    """Make ``obj`` strict-JSON serialisable: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(report: dict, args) -> None:
    text = json.dumps(_clean(report), indent=2)
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _resolve_data(path_text: str):
    """Find a data file: as given, under ``$EXPWEIBULL_DATA_DIR``, then among bundled fixtures."""
    path = Path(path_text)
    if path.is_file():
        return path, str(path)
    env_dir = os.environ.get(DATA_DIR_ENV)
    if env_dir:
        for candidate in (Path(env_dir) / path, Path(env_dir) / path.name):
            if candidate.is_file():
                return candidate, str(candidate)
    key = path.name[:-4] if path.name.endswith(".csv") else path.name
    if key in BUNDLED:
        return bundled_path(key), f"bundled:{BUNDLED[key][0]}"
    raise DataError(f"data file not found: {path_text}")


def _load_sample(args):
    path, resolved = _resolve_data(args.data)
    data = load_csv(path, column=args.column, delimiter=args.delimiter)
    if args.r is not None:
        sample = apply_type2_censoring(data, r=args.r)
    else:
        sample = apply_type2_censoring(data, rate=args.censor_rate or 0.0, rounding=args.rounding)
    digest = {
        "path": args.data,
        "resolved": resolved,
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "n": sample.n_total,
        "r": sample.r,
        "censor_rate": args.censor_rate if args.r is None else None,
        "rounding": args.rounding if args.r is None else None,
    }
    return sample, digest


def _config(args) -> FitConfig:
    return FitConfig(
        epsilon_outer=args.epsilon_outer,
        epsilon_inner=args.epsilon_inner,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        beta_init=args.beta_init,
        alpha_init=args.alpha_init,
        lambda_init=args.lambda_init,
        beta_bracket=tuple(args.beta_bracket),
        prescan_points=args.prescan_points,
    )


def _base_report(command: str, argv) -> dict:
    return {"schema_version": SCHEMA_VERSION, "version": __version__, "command": {"name": command, "argv": list(argv)}}


def cmd_fit(args, argv):
    config = _config(args)
    sample, digest = _load_sample(args)
    report = _base_report("fit", argv)
    report["input"] = digest
    result, other = fit(sample, config, family=args.dist, method=args.method, check=args.check)
    report["fit"] = result.to_dict(include_trace=args.trace)
    if other is not None:
        report["crosscheck"] = other.to_dict()
    code = EXIT_OK if result.converged else EXIT_NONCONVERGENCE
    if args.fisher:
        fm = fisher_matrix(result.theta_hat, sample.proportion)
        report["fisher"] = fm.to_dict()
        try:
            ci = asymptotic_ci(result, sample, args.level)
            report["confidence_intervals"] = {
                "level": args.level,
                "intervals": {k: list(v) for k, v in zip(("alpha", "beta", "sigma"), ci)},
            }
        except (NonConvergenceError, SingularInformationError) as exc:
            report["confidence_intervals"] = {"level": args.level, "intervals": None, "error": str(exc)}
            code = EXIT_NONCONVERGENCE
        lrt = lrt_beta_equals_one(sample, config)
        report["lrt"] = {
            **lrt.to_dict(),
            "loglik_ewd": lrt.ewd.loglik,
            "loglik_eed": lrt.eed.loglik,
            "ewd_converged": lrt.ewd.converged,
        }
    return report, code


def cmd_shape(args, argv):
    kwargs = {"n_points": args.points}
    if args.z_max is not None:
        kwargs["z_max"] = args.z_max
    rep = shape_report(args.alpha, args.beta, scan=True, **kwargs)
    report = _base_report("shape", argv)
    report["parameters"] = {"alpha": args.alpha, "beta": args.beta}
    report.update(rep.to_dict())
    if args.scan:
        write_csv(args.scan, rep.scan.to_rows(), ["z", "z_minus_one", "s"])
        report["scan_csv"] = args.scan
    return report, EXIT_OK


def cmd_fisher(args, argv):
    theta = (args.alpha, args.beta, args.sigma)
    fm = fisher_matrix(theta, args.p)
    report = _base_report("fisher", argv)
    report["fisher"] = fm.to_dict()
    if args.n is not None and fm.covariance is not None:
        report["standard_errors"] = dict(zip(("alpha", "beta", "sigma"), fm.standard_errors(args.n)))
    return report, EXIT_OK


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"grid spec must be NAME:LO:HI:COUNT, got {text!r}")
    name, lo, hi, count = parts
    try:
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"bad numbers in grid spec {text!r}")
    if not (0 < lo <= hi and math.isfinite(hi)) or count < 1:
        raise UsageError(f"grid spec needs 0 < LO <= HI and COUNT >= 1, got {text!r}")
    return name, np.linspace(lo, hi, count)


def _profile_bounds(name, sample, config):
    if name == "beta":
        return config.beta_bracket
    if name == "alpha":
        return (1e-3, 1e3)
    return (sample.observed[0] * 1e-2, sample.observed[-1] * 1e2)


def cmd_surface(args, argv):
    names = ("alpha", "sigma") if args.dist == "eed" else ("alpha", "beta", "sigma")
    if len(args.grid) != 2:
        raise UsageError("give exactly two --grid specs")
    (xname, xs), (yname, ys) = (_parse_grid(g) for g in args.grid)
    for nm in (xname, yname):
        if nm not in names:
            raise UsageError(f"grid parameter must be one of {names} for --dist {args.dist}, got {nm!r}")
    if xname == yname:
        raise UsageError("the two grid parameters must differ")
    cells = xs.size * ys.size
    if cells > args.max_cells:
        raise UsageError(f"grid has {cells} cells, above --max-cells {args.max_cells}")
    sample, digest = _load_sample(args)
    config = _config(args)
    rest = [nm for nm in ("alpha", "beta", "sigma") if nm not in (xname, yname)][0]
    fixed = 1.0 if args.dist == "eed" else None
    if args.fix is not None:
        fname, _, fval = args.fix.partition("=")
        if fname != rest:
            raise UsageError(f"--fix must name the non-grid parameter {rest!r}")
        try:
            fixed = _positive_float(fval)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc))
    index = {"alpha": 0, "beta": 1, "sigma": 2}

    def loglik(point):
        return log_likelihood(sample, point, include_constant=False)

    rows = []
    for xv in xs:
        for yv in ys:
            theta = [0.0, 0.0, 0.0]
            theta[index[xname]], theta[index[yname]] = xv, yv
            if fixed is not None:
                theta[index[rest]] = fixed
                value = loglik(theta)
                other = fixed
            else:
                lo, hi = _profile_bounds(rest, sample, config)

                def neg(log_v, theta=theta):
                    trial = list(theta)
                    trial[index[rest]] = math.exp(log_v)
                    val = loglik(trial)
                    return -val if math.isfinite(val) else 1e300

                res = minimize_scalar(neg, bounds=(math.log(lo), math.log(hi)), method="bounded",
                                      options={"xatol": 1e-10})
                other = math.exp(res.x)
                value = -res.fun if res.fun < 1e300 else -math.inf
            rows.append((xv, yv, other, value))
    header = [xname, yname, rest, "loglik_kernel"]
    write_csv(args.csv, rows, header)
    best = max(rows, key=lambda row: row[3])
    report = _base_report("surface", argv)
    report["input"] = digest
    report["grid"] = {
        "x": {"name": xname, "lo": xs[0], "hi": xs[-1], "count": xs.size},
        "y": {"name": yname, "lo": ys[0], "hi": ys[-1], "count": ys.size},
        "other": {"name": rest, "mode": "fixed" if fixed is not None else "profiled"},
        "cells": cells,
        "csv": args.csv,
    }
    report["maximum"] = dict(zip(header, best))
    return report, EXIT_OK


def cmd_simulate(args, argv):
    rep = run_simulation(
        (args.alpha, args.beta, args.sigma),
        args.n,
        args.p,
        args.replicates,
        args.seed,
        level=args.level,
        method=args.method,
        config=_config(args),
        jobs=args.jobs,
    )
    report = _base_report("simulate", argv)
    report["simulation"] = rep.to_dict()
    if args.estimates and rep.replicates:
        write_csv(args.estimates, rep.estimates.tolist(), ["alpha", "beta", "sigma"])
    return report, EXIT_NONCONVERGENCE if rep.cap_exceeded else EXIT_OK


def _add_solver_flags(p):
    d = FitConfig()
    g = p.add_argument_group("solver")
    g.add_argument("--epsilon-outer", type=_positive_float, default=d.epsilon_outer,
                   help="relative parameter change that stops back-fitting")
    g.add_argument("--epsilon-inner", type=_positive_float, default=d.epsilon_inner,
                   help="relative step that stops the (alpha, lambda) fixed point")
    g.add_argument("--max-outer", type=_positive_int, default=d.max_outer)
    g.add_argument("--max-inner", type=_positive_int, default=d.max_inner)
    g.add_argument("--beta-init", type=_positive_float, default=d.beta_init)
    g.add_argument("--alpha-init", type=_positive_float, default=d.alpha_init)
    g.add_argument("--lambda-init", type=_positive_float, default=None,
                   help="inner starting scale (default: mean of transformed data)")
    g.add_argument("--beta-bracket", type=_positive_float, nargs=2, metavar=("LO", "HI"),
                   default=list(d.beta_bracket), help="search interval for beta")
    g.add_argument("--prescan-points", type=_nonneg_int, default=d.prescan_points,
                   help="coarse log-grid points over the beta bracket on the first sweep (0 disables)")


def _add_data_flags(p):
    p.add_argument("data", help=f"CSV of lifetimes; also looked up under ${DATA_DIR_ENV} and the bundled fixtures")
    p.add_argument("--column", default=0, help="column index or header name")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--dist", choices=("eed", "ewd"), default="ewd")
    cens = p.add_mutually_exclusive_group()
    cens.add_argument("--censor-rate", type=_rate, default=None, help="fraction censored, in [0, 1)")
    cens.add_argument("--r", type=_positive_int, default=None, help="number of observed failures")
    p.add_argument("--rounding", choices=("floor", "round", "ceil"), default="round",
                   help="how n*(1 - rate) becomes an integer r")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="expweibull", description="Exponentiated-Weibull lifetime analysis under type II censoring.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit", help="maximum likelihood fit", formatter_class=fmt)
    _add_data_flags(p)
    p.add_argument("--method", choices=("backfit", "direct"), default="backfit")
    p.add_argument("--check", action="store_true", help="also run the other method and compare")
    p.add_argument("--fisher", action="store_true", help="append information matrix, Wald intervals and LRT")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--trace", action="store_true", help="include inner iteration paths")
    _add_solver_flags(p)

    p = sub.add_parser("shape", help="hazard shape region and sign scan", formatter_class=fmt)
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--scan", metavar="CSV", help="write the (z, z-1, s) table here")
    p.add_argument("--points", type=_positive_int, default=DEFAULT_N_POINTS)
    p.add_argument("--z-max", type=_positive_float, default=None, help="scan upper end (default adaptive)")

    p = sub.add_parser("fisher", help="information matrix at given parameters", formatter_class=fmt)
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--sigma", type=_positive_float, required=True)
    p.add_argument("--p", type=_positive_float, required=True, help="observed proportion r/n in (0, 1]")
    p.add_argument("--n", type=_positive_int, default=None, help="sample size for standard errors")

    p = sub.add_parser("surface", help="log-likelihood grid for contour plots", formatter_class=fmt)
    _add_data_flags(p)
    p.add_argument("--grid", action="append", default=[], metavar="NAME:LO:HI:COUNT",
                   help="give twice, once per axis")
    p.add_argument("--fix", metavar="NAME=VALUE", help="fix the remaining parameter instead of profiling it")
    p.add_argument("--csv", required=True, help="output CSV (long format)")
    p.add_argument("--max-cells", type=_positive_int, default=DEFAULT_MAX_CELLS)
    _add_solver_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo bias, covariance and coverage", formatter_class=fmt)
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--sigma", type=_positive_float, required=True)
    p.add_argument("--n", type=_positive_int, default=2000, help="sample size per replicate")
    p.add_argument("--p", type=_positive_float, default=0.8, help="observed proportion r/n in (0, 1]")
    p.add_argument("--replicates", type=_nonneg_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--method", choices=("backfit", "direct"), default="backfit")
    p.add_argument("--estimates", metavar="CSV", help="write per-replicate estimates here")
    _add_solver_flags(p)

    for name, sp in sub.choices.items():
        sp.add_argument("-o", "--output", help="also write the JSON report to this file")
        sp.add_argument("--no-timing", action="store_true", help="omit the timing field (byte-stable output)")
    return parser


COMMANDS = {"fit": cmd_fit, "shape": cmd_shape, "fisher": cmd_fisher, "surface": cmd_surface,
            "simulate": cmd_simulate}


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"schema_version": SCHEMA_VERSION, "error": {"type": kind, "message": message,
                                                                    "exit_code": code}}, indent=2))
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        if isinstance(getattr(args, "column", None), str) and args.column.isdigit():
            args.column = int(args.column)
        if hasattr(args, "level") and not 0.0 <= args.level < 1.0:
            raise UsageError(f"--level must lie in [0, 1), got {args.level}")
        start = time.perf_counter()
        report, code = COMMANDS[args.command](args, argv)
        if not args.no_timing:
            report["timing"] = {"elapsed_seconds": round(time.perf_counter() - start, 6)}
        _emit(report, args)
        return code
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except InvalidParameterError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except (DataError, DomainError) as exc:
        return _error("data", str(exc), EXIT_DATA)
    except OSError as exc:
        return _error("data", str(exc), EXIT_DATA)
    except (NonConvergenceError, NumericalOverflowError, SingularInformationError) as exc:
        return _error("nonconvergence", str(exc), EXIT_NONCONVERGENCE)


if __name__ == "__main__":
    sys.exit(main())
