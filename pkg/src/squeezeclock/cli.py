"""Command-line front end.

Subcommands write figure-ready tables (CSV) or a JSON result record.
Exit codes: 0 success, 1 invalid input, 2 tolerance failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import oracle as _oracle
from .analytic import build_phase_error_curve
from .config import ConfigError, RunConfig, atom_number, parse_config, parse_quantity
from .core import EnsembleSpec, SpecError, linear_to_db
from .records import ResultRecord, provenance
from .stability import (Axis, clock_phase_variance, optimize_spec, reference_clock,
                        stability_map)

log = logging.getLogger("squeezeclock")

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3

ECHO_COLUMNS = ["atom_count", "xi2", "chi2", "prep_contrast", "ramsey_contrast", "theta",
                "gamma", "total_time"]


def _echo(spec: EnsembleSpec, cfg: RunConfig):
    return [spec.atom_count, spec.xi2, spec.chi2, spec.prep_contrast, spec.ramsey_contrast,
            spec.squeeze_angle, cfg.gamma, cfg.total_time]


# ---------------------------------------------------------------- subcommands

def cmd_phase_error(cfg: RunConfig, args):
    sec = "phase-error"
    n = cfg.get(sec, "phi_points")
    if n < 1:
        raise ConfigError("phase grid is empty: phi_points must be >= 1")
    phi_over_pi = np.linspace(cfg.get(sec, "phi_start").linear, cfg.get(sec, "phi_stop").linear, n)
    use_oracle = cfg.get(sec, "oracle")
    columns = ["phi_over_pi", "dphi_sq_analytic"] + (["dphi_sq_oracle"] if use_oracle else [])
    rows = []
    for spec in cfg.specs():
        analytic = build_phase_error_curve(spec)(phi_over_pi * math.pi)
        if use_oracle:
            state = _oracle.state_for_spec(spec, cfg.get(sec, "components"))
            orc = _oracle.oracle_phase_error(state, phi_over_pi * math.pi,
                                             cfg.get(sec, "estimator_points"))
        for i, p in enumerate(phi_over_pi):
            row = [p, analytic[i]] + ([orc[i]] if use_oracle else [])
            rows.append(row + _echo(spec, cfg))
    return columns + ECHO_COLUMNS, rows, {}, EXIT_OK


def cmd_stability(cfg: RunConfig, args):
    sec = "stability"
    n = cfg.get(sec, "points")
    if n < 1:
        raise ConfigError("Ramsey-time grid is empty: points must be >= 1")
    lo, hi = cfg.get(sec, "gamma_tau_start").linear, cfg.get(sec, "gamma_tau_stop").linear
    gamma, T = cfg.gamma, cfg.total_time
    if not (0 < lo <= hi <= gamma * T * (1 + 1e-12)):
        raise ConfigError(f"need 0 < gamma_tau_start <= gamma_tau_stop <= gamma*T = {gamma * T:g}")
    gt = np.geomspace(lo, hi, n) if cfg.get(sec, "spacing") == "log" else np.linspace(lo, hi, n)
    taus = np.minimum(gt / gamma, T)
    rows = []
    for spec in cfg.specs():
        sig = clock_phase_variance(build_phase_error_curve(spec), gamma, taus, T)
        rows.extend([g, s] + _echo(spec, cfg) for g, s in zip(gt, sig))
    return ["gamma_tau", "sigma2_phi"] + ECHO_COLUMNS, rows, {}, EXIT_OK


def _optimize_task(task):
    spec, gamma, T, reference = task
    try:
        return optimize_spec(spec, gamma, T, reference_clock(spec, gamma, T, reference)), None
    except Exception as exc:  # reported per row
        return None, f"{type(exc).__name__}: {exc}"


def _optimize_many(specs, cfg: RunConfig, reference: str, jobs: int):
    tasks = [(s, cfg.gamma, cfg.total_time, reference) for s in specs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_optimize_task, tasks))
    return [_optimize_task(t) for t in tasks]


OPT_COLUMNS = ["tau_opt", "gamma_tau_opt", "sigma2_phi", "sigma2_omega", "alpha", "regime",
               "sql_ratio_db", "error"]


def _opt_cells(res, err, gamma):
    if res is None:
        return [None] * 7 + [err]
    return [res.tau, gamma * res.tau, res.sigma2_phi, res.sigma2_omega, res.regime_alpha,
            res.regime, res.sql_ratio_db, None]


def cmd_optimize(cfg: RunConfig, args):
    specs = cfg.specs()
    outcomes = _optimize_many(specs, cfg, cfg.get("optimize", "reference"), args.jobs)
    rows = [_opt_cells(r, e, cfg.gamma) + _echo(s, cfg) for s, (r, e) in zip(specs, outcomes)]
    return OPT_COLUMNS + ECHO_COLUMNS, rows, {"reference": cfg.get("optimize", "reference")}, EXIT_OK


def _axis_from_config(cfg: RunConfig, i: int):
    sec = "map"
    name = cfg.get(sec, f"axis{i}")
    if name is None:
        return None
    start, stop, num = (cfg.get(sec, f"axis{i}_{k}") for k in ("start", "stop", "num"))
    if start is None or stop is None or num is None:
        raise ConfigError(f"axis{i} needs axis{i}_start, axis{i}_stop and axis{i}_num")
    if num < 1:
        raise ConfigError(f"axis{i}_num must be >= 1")
    scale = cfg.get(sec, f"axis{i}_scale")
    if scale == "auto":
        if start.db != stop.db:
            raise ConfigError(f"axis{i}: start and stop must both be in dB or both linear")
        scale = "db" if start.db else "linear"
    if scale == "db":
        a, b = (q.value if q.db else linear_to_db(q.value) for q in (start, stop))
        return Axis.span(name, a, b, num, "dB")
    a, b = start.linear, stop.linear
    return Axis.span(name, a, b, num, scale)


def cmd_map(cfg: RunConfig, args):
    axes = [a for a in (_axis_from_config(cfg, 1), _axis_from_config(cfg, 2)) if a is not None]
    if not axes:
        raise ConfigError("[map] needs at least axis1")
    grid = stability_map(cfg.template(), axes, cfg.gamma, cfg.total_time, jobs=args.jobs,
                         reference=cfg.get("map", "reference"))
    columns = [f"axis{i + 1}" for i in range(len(axes))] + [
        "sigma2_phi", "sql_ratio_db", "tau_opt", "alpha", "error"] + ECHO_COLUMNS
    rows = []
    for _, coords, spec, res, err in grid.cells():
        if res is None:
            vals = [None] * 4
        else:
            vals = [res.sigma2_phi, res.sql_ratio_db, res.tau, res.regime_alpha]
        echo = _echo(spec, cfg) if spec is not None else [None] * len(ECHO_COLUMNS)
        rows.append(list(coords) + vals + [err] + echo)
    summary = {"axes": [{"name": a.name, "scale": a.scale} for a in axes],
               "failed_cells": sum(1 for r in rows if r[len(axes) + 4])}
    return columns, rows, summary, EXIT_OK


def cmd_validate(cfg: RunConfig, args):
    sec = "validate"
    n = cfg.get(sec, "phi_points")
    if n < 1:
        raise ConfigError("phase grid is empty: phi_points must be >= 1")
    pmax = cfg.get(sec, "phi_max").linear
    if not 0 <= pmax <= 1:
        raise ConfigError("phi_max is in units of pi and must lie in [0, 1]")
    phi_over_pi = np.linspace(-pmax, pmax, n) if n > 1 else np.array([0.0])
    rtol = cfg.get(sec, "rtol").linear
    step_check = cfg.get(sec, "step_check")
    columns = ["phi_over_pi", "dphi_sq_analytic", "dphi_sq_oracle", "rel_error", "within_tol"]
    rows, steps, worst = [], [], None
    for spec in cfg.specs():
        _oracle.require_tractable(spec)
        cmp = _oracle.compare_with_analytic(spec, phi_over_pi * math.pi, cfg.get(sec, "components"),
                                            cfg.get(sec, "estimator_points"), step_check)
        rel = cmp.rel_error
        for p, a, o, r in zip(phi_over_pi, cmp.analytic, cmp.oracle, rel):
            ok = bool(abs(r) <= rtol)
            rows.append([p, a, o, r, ok] + _echo(spec, cfg))
            if worst is None or abs(r) > abs(worst[2]):
                worst = (spec, p, r)
        if step_check:
            smooth = cmp.oracle_step_ratio >= _oracle.STEP_RATIO_THRESHOLD
            steps.append({"xi2_db": spec.xi2_db, "area_db": spec.area_db,
                          "oracle_step_ratio": cmp.oracle_step_ratio,
                          "analytic_step_ratio": cmp.analytic_step_ratio,
                          "oracle_smooth": smooth,
                          "analytic_step": cmp.analytic_step_ratio < _oracle.STEP_RATIO_THRESHOLD})
    failed = [r for r in rows if not r[4]]
    rough = [s for s in steps if not s["oracle_smooth"]]
    summary = {"rtol": rtol, "cells": len(rows), "failed_cells": len(failed), "step_check": steps}
    status = EXIT_OK
    if failed or rough:
        status = EXIT_TOLERANCE
        if worst is not None and failed:
            spec, p, r = worst
            log.error("tolerance failure: worst cell N=%s xi2=%.4g dB A2=%.4g dB phi=%.4g*pi "
                      "rel_error=%.4g (rtol %.3g); %d of %d cells failed",
                      spec.atom_count, spec.xi2_db, spec.area_db, p, r, rtol, len(failed), len(rows))
        for s in rough:
            log.error("oracle curve shows a step near pi/2 for xi2=%.4g dB (ratio %.3g)",
                      s["xi2_db"], s["oracle_step_ratio"])
    return columns + ECHO_COLUMNS, rows, summary, status


EXPERIMENT_FIELDS = ("label", "atom_count", "xi2_db", "area_db")


def read_experiment_table(path: str):
    """Rows of (label, N, xi2 dB, A2 dB); malformed rows are skipped with a warning."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return out
        missing = [f for f in EXPERIMENT_FIELDS if f not in reader.fieldnames]
        if missing:
            raise ConfigError(f"experiment table lacks columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                n = atom_number(parse_quantity(rec["atom_count"]).linear)
                xi_q, a_q = parse_quantity(rec["xi2_db"]), parse_quantity(rec["area_db"])
                spec = EnsembleSpec.from_db(n, xi_q.value, a_q.value)
            except (ConfigError, SpecError, TypeError, AttributeError) as exc:
                log.warning("skipping malformed experiment row %d: %s", lineno, exc)
                continue
            out.append(((rec["label"] or "").strip(), spec))
    return out


def cmd_experiments(cfg: RunConfig, args):
    sec = "experiments"
    path = args.table or cfg.get(sec, "table")
    if not path:
        raise ConfigError("experiments needs a table (--table or [experiments] table)")
    entries = read_experiment_table(path)
    target, points = cfg.get(sec, "extrapolate_to"), cfg.get(sec, "extrapolate_points")
    cells = []
    for label, spec in entries:
        cells.append((label, "measured", spec))
        if target is not None and points > 0:
            stop = target.value if target.db else linear_to_db(target.linear)
            for x in np.linspace(spec.xi2_db, stop, points + 1)[1:]:
                try:
                    cells.append((label, "extrapolated",
                                  EnsembleSpec.from_db(spec.atom_count, x, spec.area_db)))
                except SpecError as exc:
                    log.warning("skipping extrapolation of %r to %.3g dB: %s", label, x, exc)
    outcomes = _optimize_many([c[2] for c in cells], cfg, cfg.get(sec, "reference"), args.jobs)
    columns = ["label", "kind", "atom_count", "xi2_db", "area_db"] + OPT_COLUMNS
    rows = [[label, kind, spec.atom_count, spec.xi2_db, spec.area_db] + _opt_cells(r, e, cfg.gamma)
            for (label, kind, spec), (r, e) in zip(cells, outcomes)]
    return columns, rows, {"rows": len(rows)}, EXIT_OK


COMMANDS = {
    "phase-error": (cmd_phase_error, "csv", "phase estimation error versus phase deviation"),
    "stability": (cmd_stability, "csv", "clock phase variance versus Ramsey time"),
    "optimize": (cmd_optimize, "json", "optimal Ramsey time and stability per ensemble"),
    "map": (cmd_map, "csv", "optimized stability over a 1-D or 2-D parameter grid"),
    "validate": (cmd_validate, "csv", "exact simulation versus analytic phase error"),
    "experiments": (cmd_experiments, "csv", "stability gain for a table of measured states"),
}


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    """Usage errors are input validation errors (exit 1), not tolerance failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common_flags(default):
    common = _Parser(add_help=False)
    common.add_argument("--config", default=default, help="configuration file (INI-style sections)")
    common.add_argument("--out", default=default, help="output path (default: standard output)")
    common.add_argument("--format", default=default, choices=("csv", "json"), help="output format")
    common.add_argument("--jobs", default=default, type=int, help="worker processes for sweeps")
    common.add_argument("--canonical", default=default, action="store_true",
                        help="omit the timestamp so output is byte-reproducible")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Global flags are accepted before or after the subcommand."""
    parser = _Parser(prog="squeezeclock", parents=[_common_flags(None)],
                     description="Squeezed-state atomic clock stability tools.")
    sub = parser.add_subparsers(dest="command", required=True)
    after = _common_flags(argparse.SUPPRESS)
    for name, (_, _, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[after], help=helptext)
        if name == "experiments":
            p.add_argument("--table", help="CSV with columns label, atom_count, xi2_db, area_db")
    return parser


def _load_config(path):
    if path is None:
        return parse_config("")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.jobs = args.jobs or 1
    args.canonical = bool(args.canonical)
    args.table = getattr(args, "table", None)
    func, default_fmt, _ = COMMANDS[args.command]
    fmt = args.format or default_fmt
    try:
        cfg = _load_config(args.config)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg.lo_model()
        columns, rows, summary, status = func(cfg, args)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (ConfigError, SpecError, _oracle.OracleError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    record = ResultRecord(args.command, cfg.as_dict(), columns, rows,
                          provenance(cfg.digest(), args.canonical), summary)
    text = record.to_json() if fmt == "json" else record.to_csv()
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return status


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
