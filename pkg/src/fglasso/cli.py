"""Command-line front end.

Three subcommands:

* ``simulate CONFIG.json``: run a Monte-Carlo sweep and write the raw log,
  aggregate CSV/JSON reports, and a text table.
* ``fit DATA_DIR``: estimate a system from CSV files (``y.csv`` with N rows of
  T observations; ``x_1.csv`` .. ``x_N.csv`` each T x K, no headers) and write
  ``beta.csv``, ``omega.csv``, ``se.csv``, ``summary.json``.
* ``diagnose CONFIG.json``: run incoherence / rate / coverage experiments and
  write long-format CSV/JSON results.

Configs are JSON documents with a ``spec_version`` field; unknown keys are
rejected and every violation is listed.  Outputs carry no timestamps, so
reruns with the same config and seed overwrite with identical bytes.  Exit
status is 0 only when no error record was produced (2 for an invalid config).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dgp import DESIGN_KINDS, PrecisionDesign, build_precision
from .diagnostics import (
    CoverageExperimentSpec,
    MetricRow,
    RateExperimentSpec,
    coverage_experiment,
    incoherence,
    rate_cells_to_rows,
    rate_experiment,
    rows_to_csv,
    rows_to_json,
)
from .errors import (
    ConfigInvalid,
    FglassoError,
    MissingFile,
    ShapeMismatch,
    SingularSigmaHat,
)
from .glasso import GlassoConfig
from .harness import ESTIMATORS, SweepSpec, render_table, run_sweep, write_raw_log
from .linalg import read_matrix_csv, write_matrix_csv
from .modelselect import CvSpec, cross_validate
from .sur import (
    SurDataset,
    fit_fglasso,
    fit_fgls,
    fit_gls,
    fit_ols,
    gls_standard_errors,
)

SPEC_VERSION = 1

_CV_KEYS = {"n_folds", "n_lambdas", "lambda_grid", "contiguous_folds"}
_GLASSO_KEYS = {"max_sweeps", "tol", "inner_max_iter", "inner_tol"}
_SIMULATE_KEYS = {
    "spec_version", "designs", "cells", "n_reps", "estimators",
    "seed", "threads", "cv", "glasso",
}
_DIAGNOSE_KEYS = {"spec_version", "experiments", "seed", "cv", "glasso"}
_EXPERIMENT_KEYS = {
    "incoherence": {"kind", "design", "n"},
    "rate": {"kind", "design", "n", "t_grid", "n_reps"},
    "coverage": {"kind", "design", "n", "t", "n_reps", "nominal_level"},
}


def _check_int(cfg, key, violations, minimum=1, required=False):
    if key not in cfg:
        if required:
            violations.append(f"missing required key {key!r}")
        return
    value = cfg[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        violations.append(f"{key!r} must be an integer >= {minimum}")


def _load_config(path, allowed_keys) -> tuple[dict, list[str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise MissingFile(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([f"not valid JSON: {exc}"]) from None
    violations = []
    if not isinstance(cfg, dict):
        raise ConfigInvalid(["top level must be a JSON object"])
    if cfg.get("spec_version") != SPEC_VERSION:
        violations.append(f"'spec_version' must equal {SPEC_VERSION}")
    violations.extend(f"unknown key {k!r}" for k in sorted(set(cfg) - allowed_keys))
    return cfg, violations


def _parse_cv(cfg: dict, violations: list[str]) -> CvSpec:
    sub = cfg.get("cv", {})
    if not isinstance(sub, dict):
        violations.append("'cv' must be an object")
        return CvSpec()
    violations.extend(f"unknown key 'cv.{k}'" for k in sorted(set(sub) - _CV_KEYS))
    _check_int(sub, "n_folds", violations, minimum=2)
    _check_int(sub, "n_lambdas", violations, minimum=2)
    grid = sub.get("lambda_grid")
    if grid is not None and (
        not isinstance(grid, list) or not all(isinstance(v, (int, float)) for v in grid)
    ):
        violations.append("'cv.lambda_grid' must be a list of numbers")
        grid = None
    if violations:
        return CvSpec()
    try:
        return CvSpec(
            n_folds=sub.get("n_folds", 5),
            lambda_grid=tuple(grid) if grid else None,
            n_grid_points=sub.get("n_lambdas", 20),
            contiguous_folds=bool(sub.get("contiguous_folds", False)),
        )
    except ValueError as exc:
        violations.append(f"cv: {exc}")
        return CvSpec()


def _parse_glasso(cfg: dict, violations: list[str]) -> GlassoConfig:
    sub = cfg.get("glasso", {})
    if not isinstance(sub, dict):
        violations.append("'glasso' must be an object")
        return GlassoConfig(lam=1.0)
    violations.extend(f"unknown key 'glasso.{k}'" for k in sorted(set(sub) - _GLASSO_KEYS))
    try:
        return GlassoConfig(
            lam=1.0,
            max_sweeps=sub.get("max_sweeps", 200),
            tol=sub.get("tol", 1e-5),
            inner_max_iter=sub.get("inner_max_iter", 1000),
            inner_tol=sub.get("inner_tol", 1e-7),
        )
    except (ValueError, TypeError) as exc:
        violations.append(f"glasso: {exc}")
        return GlassoConfig(lam=1.0)


def _build_sweep_spec(cfg: dict, violations: list[str], args) -> SweepSpec | None:
    designs = cfg.get("designs")
    if not isinstance(designs, list) or not designs:
        violations.append("'designs' must be a nonempty list")
        designs = []
    else:
        for d in designs:
            if d not in DESIGN_KINDS:
                violations.append(f"unknown design {d!r}; choose from {list(DESIGN_KINDS)}")
    cells = cfg.get("cells")
    if (
        not isinstance(cells, list)
        or not cells
        or not all(
            isinstance(c, list) and len(c) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in c)
            for c in cells
        )
    ):
        violations.append("'cells' must be a nonempty list of [N, T] positive integer pairs")
        cells = []
    _check_int(cfg, "n_reps", violations, required=True)
    estimators = cfg.get("estimators", list(ESTIMATORS))
    if not isinstance(estimators, list) or not estimators:
        violations.append("'estimators' must be a nonempty list")
        estimators = []
    else:
        for est in estimators:
            if est not in ESTIMATORS:
                violations.append(f"unknown estimator {est!r}; choose from {list(ESTIMATORS)}")
    _check_int(cfg, "seed", violations, minimum=0)
    _check_int(cfg, "threads", violations, minimum=1)
    cv = _parse_cv(cfg, violations)
    glasso = _parse_glasso(cfg, violations)
    if violations:
        return None
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    return SweepSpec(
        designs=tuple(designs),
        cells=tuple((c[0], c[1]) for c in cells),
        n_reps=cfg["n_reps"],
        estimators=tuple(estimators),
        seed=seed,
        cv=cv,
        glasso=glasso,
    )


def cmd_simulate(args) -> int:
    cfg, violations = _load_config(args.config, _SIMULATE_KEYS)
    spec = _build_sweep_spec(cfg, violations, args)
    if violations:
        raise ConfigInvalid(violations)
    threads = args.threads if args.threads is not None else cfg.get("threads", 1)
    report = run_sweep(spec, threads=threads)
    out = args.out
    os.makedirs(out, exist_ok=True)
    write_raw_log(report.raw, os.path.join(out, "raw_log.csv"))
    for name, fmt in (("report.csv", "csv"), ("report.json", "json"), ("table.txt", "text")):
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(render_table(report, fmt))
    print(render_table(report, "text"))
    error_lines = [f"{c.design} N={c.n} T={c.t}: {msg}" for c in report.cells for msg in c.errors]
    if error_lines:
        json.dump({"error": "ReplicationErrors", "details": error_lines}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


def _read_fit_inputs(data_dir):
    y_path = os.path.join(data_dir, "y.csv")
    if not os.path.exists(y_path):
        raise MissingFile(f"missing {y_path}")
    y = read_matrix_csv(y_path)
    n, t = y.shape
    blocks = []
    k = None
    for i in range(1, n + 1):
        x_path = os.path.join(data_dir, f"x_{i}.csv")
        if not os.path.exists(x_path):
            raise MissingFile(f"missing {x_path} (expected one per equation, 1..{n})")
        block = read_matrix_csv(x_path)
        if block.shape[0] != t:
            raise ShapeMismatch(f"{x_path}: {block.shape[0]} rows, expected T={t}")
        if k is None:
            k = block.shape[1]
        elif block.shape[1] != k:
            raise ShapeMismatch(f"{x_path}: {block.shape[1]} columns, expected K={k}")
        blocks.append(block)
    return SurDataset(np.stack(blocks), y)


def cmd_fit(args) -> int:
    data = _read_fit_inputs(args.data_dir)
    n = data.n_equations
    cv_trace = None
    lam = None
    if args.estimator == "ols":
        fit = fit_ols(data)
        omega_used = np.eye(n)
    elif args.estimator == "gls":
        if args.omega is None:
            raise ConfigInvalid(["--omega is required for --estimator gls"])
        omega_used = read_matrix_csv(args.omega)
        fit = fit_gls(data, omega_used)
    elif args.estimator == "fgls":
        try:
            fit = fit_fgls(data)
        except SingularSigmaHat as exc:
            raise SingularSigmaHat(
                f"{exc} (residual covariance is singular; with T < N use --estimator fglasso)"
            ) from exc
        omega_used = fit.omega_used
    else:  # fglasso
        glasso_cfg = GlassoConfig(lam=args.lam if args.lam is not None else 1.0)
        if args.lam is None:
            cv = cross_validate(
                data,
                CvSpec(
                    n_folds=args.n_folds,
                    n_grid_points=args.n_lambdas,
                    seed=args.seed,
                    contiguous_folds=args.contiguous_folds,
                ),
                glasso_cfg,
            )
            lam = cv.best_lambda
            cv_trace = [[l, m] for l, m in cv.mse_by_lambda]
        else:
            lam = args.lam
        fit = fit_fglasso(data, GlassoConfig(lam=lam))
        omega_used = fit.omega_used

    se = gls_standard_errors(data, omega_used)
    os.makedirs(args.out, exist_ok=True)
    write_matrix_csv(os.path.join(args.out, "omega.csv"), omega_used)
    k = data.k_per_equation
    with open(os.path.join(args.out, "beta.csv"), "w", encoding="utf-8") as fh:
        fh.write("equation,coefficient,estimate\n")
        for i in range(n):
            for j in range(k):
                fh.write(f"{i + 1},{j + 1},{fit.beta_hat[i * k + j]:.17g}\n")
    with open(os.path.join(args.out, "se.csv"), "w", encoding="utf-8") as fh:
        fh.write("equation,coefficient,se\n")
        for i in range(n):
            for j in range(k):
                fh.write(f"{i + 1},{j + 1},{se[i * k + j]:.17g}\n")
    summary = {
        "estimator": args.estimator,
        "n_equations": n,
        "n_periods": data.n_periods,
        "k_per_equation": k,
        "lambda": lam,
        "cv_trace": cv_trace,
        "seed": args.seed,
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote beta.csv, omega.csv, se.csv, summary.json to {args.out}")
    return 0


def _run_experiment(entry: dict, seed: int, cv: CvSpec, glasso: GlassoConfig) -> list[MetricRow]:
    kind = entry["kind"]
    design = PrecisionDesign(entry["design"], entry["n"])
    if kind == "incoherence":
        report = incoherence(build_precision(design))
        print(
            f"incoherence {design.kind} N={design.n}: "
            f"alpha_slack={report.alpha_slack:.6g} "
            f"kappa_gamma={report.kappa_gamma:.6g} kappa_sigma={report.kappa_sigma:.6g}"
        )
        return [
            MetricRow(design.kind, design.n, 0, name, value, 0.0, 1)
            for name, value in report._asdict().items()
        ]
    if kind == "rate":
        cells = rate_experiment(
            RateExperimentSpec(
                designs=(design,),
                t_grid=tuple(entry["t_grid"]),
                n_reps=entry["n_reps"],
                seed=seed,
                cv=cv,
                glasso=glasso,
            )
        )
        return rate_cells_to_rows(cells)
    result = coverage_experiment(
        CoverageExperimentSpec(
            design=design,
            n_periods=entry["t"],
            n_reps=entry["n_reps"],
            nominal_level=entry.get("nominal_level", 0.95),
            seed=seed,
            cv=cv,
            glasso=glasso,
        )
    )
    print(
        f"coverage {design.kind} N={design.n} T={entry['t']}: "
        f"true_omega={result.coverage_true_omega:.4f} plugin={result.coverage_plugin:.4f}"
    )
    return [
        MetricRow(design.kind, design.n, entry["t"], "coverage_true_omega",
                  result.coverage_true_omega, 0.0, entry["n_reps"]),
        MetricRow(design.kind, design.n, entry["t"], "coverage_plugin",
                  result.coverage_plugin, 0.0, entry["n_reps"]),
    ]


def cmd_diagnose(args) -> int:
    cfg, violations = _load_config(args.config, _DIAGNOSE_KEYS)
    experiments = cfg.get("experiments")
    if not isinstance(experiments, list) or not experiments:
        violations.append("'experiments' must be a nonempty list")
        experiments = []
    for idx, entry in enumerate(experiments):
        if not isinstance(entry, dict) or entry.get("kind") not in _EXPERIMENT_KEYS:
            violations.append(
                f"experiments[{idx}]: 'kind' must be one of {sorted(_EXPERIMENT_KEYS)}"
            )
            continue
        allowed = _EXPERIMENT_KEYS[entry["kind"]]
        violations.extend(
            f"experiments[{idx}]: unknown key {k!r}" for k in sorted(set(entry) - allowed)
        )
        if "t_grid" in allowed:
            grid = entry.get("t_grid")
            if not isinstance(grid, list) or not all(isinstance(v, int) for v in grid):
                violations.append(f"experiments[{idx}]: 't_grid' must be a list of integers")
        for key in allowed - {"kind", "design", "nominal_level", "t_grid"}:
            _check_int(entry, key, violations, required=True)
        if entry.get("design") is not None and entry.get("design") not in DESIGN_KINDS:
            violations.append(f"experiments[{idx}]: unknown design {entry.get('design')!r}")
        if "design" not in entry:
            violations.append(f"experiments[{idx}]: missing required key 'design'")
    _check_int(cfg, "seed", violations, minimum=0)
    cv = _parse_cv(cfg, violations)
    glasso = _parse_glasso(cfg, violations)
    if violations:
        raise ConfigInvalid(violations)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    rows: list[MetricRow] = []
    for entry in experiments:
        rows.extend(_run_experiment(entry, seed, cv, glasso))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "diagnostics.csv"), "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
    with open(os.path.join(args.out, "diagnostics.json"), "w", encoding="utf-8") as fh:
        fh.write(rows_to_json(rows))
        fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fglasso",
        description="Sparse-precision feasible GLS for large regression systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo sweep from a JSON config")
    sim.add_argument("config")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--threads", type=int, default=None, help="override worker count")
    sim.add_argument("--out", default=".", help="output directory")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit estimators on CSV data")
    fit.add_argument("data_dir")
    fit.add_argument("--estimator", choices=("ols", "gls", "fgls", "fglasso"),
                     default="fglasso")
    fit.add_argument("--lam", type=float, default=None,
                     help="fixed penalty (skips cross-validation)")
    fit.add_argument("--omega", default=None, help="precision matrix CSV for --estimator gls")
    fit.add_argument("--n-folds", type=int, default=5)
    fit.add_argument("--n-lambdas", type=int, default=20)
    fit.add_argument("--contiguous-folds", action="store_true")
    fit.add_argument("--seed", type=int, default=0, help="fold-assignment seed")
    fit.add_argument("--out", default=".", help="output directory")
    fit.set_defaults(func=cmd_fit)

    diag = sub.add_parser("diagnose", help="run diagnostic experiments from a JSON config")
    diag.add_argument("config")
    diag.add_argument("--seed", type=int, default=None, help="override the config seed")
    diag.add_argument("--out", default=".", help="output directory")
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        json.dump({"error": "ConfigInvalid", "violations": exc.violations}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (FglassoError, OSError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
