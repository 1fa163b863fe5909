"""Monte-Carlo sweeps over (design, N, T) cells and table-style reporting.

Each replication simulates a dataset, runs the requested estimators, and
records the sup-norm and root-mean-square deviation of the stacked
coefficient estimate from the truth (RMSE convention: Frobenius norm divided
by sqrt(KN)).  Aggregates report both statistics scaled by 100, the
replication count where the penalized feasible estimator beats the plain
feasible one, and the chosen-penalty statistics.

Replications are deterministic functions of (seed, design, N, T, rep), so
results are identical regardless of worker count or scheduling; aggregation
merges records in canonical order.  Cells with more equations than periods
mark the plain feasible estimator as undefined instead of failing, and any
per-replication error is recorded in the report without aborting the sweep.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dgp import DESIGN_KINDS, PrecisionDesign, SimSpec, derive_seed, simulate
from .errors import FglassoError
from .glasso import GlassoConfig
from .modelselect import CvSpec, cross_validate
from .sur import fit_fglasso, fit_fgls, fit_gls, fit_ols

ESTIMATORS = ("OLS", "GLS", "FGLS", "FGLasso")


@dataclass(frozen=True)
class SweepSpec:
    """What to run: designs x (N, T) cells x replications x estimators."""

    designs: tuple[str, ...]
    cells: tuple[tuple[int, int], ...]
    n_reps: int = 100
    estimators: tuple[str, ...] = ESTIMATORS
    seed: int = 0
    cv: CvSpec = CvSpec()
    glasso: GlassoConfig = GlassoConfig(lam=1.0)  # lam is replaced by CV

    def __post_init__(self):
        object.__setattr__(self, "designs", tuple(self.designs))
        object.__setattr__(self, "cells", tuple((int(n), int(t)) for n, t in self.cells))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.n_reps < 1:
            raise ValueError("need at least one replication")
        if not self.cells:
            raise ValueError("need at least one (N, T) cell")
        for kind in self.designs:
            if kind not in DESIGN_KINDS:
                raise ValueError(f"unknown design {kind!r}")
        for est in self.estimators:
            if est not in ESTIMATORS:
                raise ValueError(f"unknown estimator {est!r}; choose from {ESTIMATORS}")


@dataclass(frozen=True)
class RepRecord:
    """One raw log row: a single estimator on a single replication."""

    design: str
    n: int
    t: int
    rep: int
    estimator: str
    linf: float | None
    rmse: float | None
    selected_lambda: float | None
    solver_sweeps: int | None
    wall_time: float
    error: str | None


@dataclass
class EstimatorStats:
    n_used: int
    mean_linf_x100: float
    sd_linf_x100: float
    mean_rmse_x100: float
    sd_rmse_x100: float


@dataclass
class CellReport:
    design: str
    n: int
    t: int
    n_reps: int
    estimators: dict[str, EstimatorStats]
    win_linf: int | None
    win_rmse: int | None
    win_basis: int
    lambda_mean_x100: float | None
    lambda_sd_x100: float | None
    fgls_undefined: bool
    errors: list[str]


@dataclass
class McReport:
    seed: int
    n_reps: int
    cells: list[CellReport]
    raw: list[RepRecord] = field(default_factory=list, compare=False, repr=False)


def _design_for(kind: str, n: int) -> PrecisionDesign:
    if kind == "lattice4nn":
        side = round(n**0.5)
        n = side * side  # lattice sizes snap to the nearest perfect square
    return PrecisionDesign(kind, n)


def _deviation_norms(beta_hat: np.ndarray, beta_true: np.ndarray) -> tuple[float, float]:
    delta = beta_hat - beta_true
    return float(np.max(np.abs(delta))), float(np.sqrt(np.mean(delta * delta)))


def _replicate(spec: SweepSpec, kind: str, n: int, t: int, rep: int) -> list[RepRecord]:
    """Run all requested estimators on one simulated dataset."""
    design = _design_for(kind, n)
    design_id = DESIGN_KINDS.index(kind)
    sim_seed = derive_seed(spec.seed, design_id, design.n, t, rep, 0)
    cv_seed = derive_seed(spec.seed, design_id, design.n, t, rep, 1)
    data, beta_true, omega_true = simulate(SimSpec(design, t, seed=sim_seed))
    records = []
    for est in spec.estimators:
        if est == "FGLS" and t < design.n:
            continue  # undefined cell, flagged at aggregation
        start = time.perf_counter()
        lam = None
        sweeps = None
        try:
            if est == "OLS":
                fit = fit_ols(data)
            elif est == "GLS":
                fit = fit_gls(data, omega_true)
            elif est == "FGLS":
                fit = fit_fgls(data)
            else:
                cv = cross_validate(data, replace(spec.cv, seed=cv_seed), spec.glasso)
                fit = fit_fglasso(data, replace(spec.glasso, lam=cv.best_lambda))
                lam = cv.best_lambda
                sweeps = fit.solver_meta.sweeps_used
            linf, rmse = _deviation_norms(fit.beta_hat, beta_true)
            error = None
        except FglassoError as exc:
            linf = rmse = None
            error = f"{type(exc).__name__}: {exc}"
        records.append(
            RepRecord(
                kind, design.n, t, rep, est, linf, rmse, lam, sweeps,
                time.perf_counter() - start, error,
            )
        )
    return records


def _replicate_star(args) -> list[RepRecord]:
    return _replicate(*args)


def _sample_sd(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def _aggregate_cell(spec: SweepSpec, kind: str, n_requested: int, t: int,
                    records: list[RepRecord]) -> CellReport:
    design_n = _design_for(kind, n_requested).n
    stats: dict[str, EstimatorStats] = {}
    errors = []
    by_est: dict[str, list[RepRecord]] = {est: [] for est in spec.estimators}
    for record in records:
        by_est[record.estimator].append(record)
        if record.error is not None:
            errors.append(f"rep={record.rep} estimator={record.estimator}: {record.error}")
    for est in spec.estimators:
        good = [r for r in by_est[est] if r.error is None]
        if not good:
            continue
        linf = np.array([r.linf for r in good]) * 100.0
        rmse = np.array([r.rmse for r in good]) * 100.0
        stats[est] = EstimatorStats(
            len(good),
            float(np.mean(linf)), _sample_sd(linf),
            float(np.mean(rmse)), _sample_sd(rmse),
        )

    win_linf = win_rmse = None
    win_basis = 0
    if "FGLasso" in spec.estimators and "FGLS" in spec.estimators:
        fgl = {r.rep: r for r in by_est["FGLasso"] if r.error is None}
        fgls = {r.rep: r for r in by_est["FGLS"] if r.error is None}
        shared = sorted(set(fgl) & set(fgls))
        if shared:
            win_basis = len(shared)
            win_linf = sum(fgl[rep].linf <= fgls[rep].linf for rep in shared)
            win_rmse = sum(fgl[rep].rmse <= fgls[rep].rmse for rep in shared)

    lam_mean = lam_sd = None
    lams = np.array([r.selected_lambda for r in by_est.get("FGLasso", ())
                     if r.error is None and r.selected_lambda is not None])
    if lams.size:
        lam_mean = float(np.mean(lams * 100.0))
        lam_sd = _sample_sd(lams * 100.0)

    fgls_undefined = "FGLS" in spec.estimators and t < design_n
    return CellReport(
        kind, design_n, t, spec.n_reps, stats,
        win_linf, win_rmse, win_basis, lam_mean, lam_sd, fgls_undefined, errors,
    )


def run_sweep(spec: SweepSpec, threads: int = 1) -> McReport:
    """Execute the sweep; replications may run in parallel worker processes
    without changing any reported number."""
    tasks = [
        (spec, kind, n, t, rep)
        for kind in spec.designs
        for n, t in spec.cells
        for rep in range(spec.n_reps)
    ]
    if threads <= 1:
        all_records = [_replicate_star(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            all_records = list(pool.map(_replicate_star, tasks))

    flat: list[RepRecord] = [r for group in all_records for r in group]
    cells = []
    for kind in spec.designs:
        for n, t in spec.cells:
            design_n = _design_for(kind, n).n
            cell_records = sorted(
                (r for r in flat if r.design == kind and r.n == design_n and r.t == t),
                key=lambda r: (r.rep, ESTIMATORS.index(r.estimator)),
            )
            cells.append(_aggregate_cell(spec, kind, n, t, cell_records))
    return McReport(spec.seed, spec.n_reps, cells, raw=flat)


# ---------------------------------------------------------------------------
# rendering

_CSV_COLUMNS = [
    "design", "n", "t", "n_reps", "estimator", "n_used",
    "mean_linf_x100", "sd_linf_x100", "mean_rmse_x100", "sd_rmse_x100",
    "win_linf", "win_rmse", "win_basis",
    "lambda_mean_x100", "lambda_sd_x100", "fgls_undefined", "errors",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(report: McReport, fmt: str) -> str:
    """Serialize the aggregate report: 'csv' and 'json' are lossless views,
    'text' is a terminal table (estimator rows by cell columns, x100 scaling,
    sd in parentheses)."""
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "json":
        return _render_json(report)
    if fmt == "text":
        return _render_text(report)
    raise ValueError(f"unknown format {fmt!r}")


def _render_csv(report: McReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for cell in report.cells:
        shown = list(cell.estimators) or [""]
        for est in shown:
            stats = cell.estimators.get(est)
            writer.writerow([
                cell.design, cell.n, cell.t, cell.n_reps, est,
                _fmt(stats.n_used if stats else None),
                _fmt(stats.mean_linf_x100 if stats else None),
                _fmt(stats.sd_linf_x100 if stats else None),
                _fmt(stats.mean_rmse_x100 if stats else None),
                _fmt(stats.sd_rmse_x100 if stats else None),
                _fmt(cell.win_linf), _fmt(cell.win_rmse), _fmt(cell.win_basis),
                _fmt(cell.lambda_mean_x100), _fmt(cell.lambda_sd_x100),
                _fmt(cell.fgls_undefined),
                json.dumps(cell.errors),
            ])
    return buf.getvalue()


def _render_json(report: McReport) -> str:
    payload = {
        "seed": report.seed,
        "n_reps": report.n_reps,
        "cells": [
            {
                "design": c.design,
                "n": c.n,
                "t": c.t,
                "n_reps": c.n_reps,
                "estimators": {
                    est: {
                        "n_used": s.n_used,
                        "mean_linf_x100": s.mean_linf_x100,
                        "sd_linf_x100": s.sd_linf_x100,
                        "mean_rmse_x100": s.mean_rmse_x100,
                        "sd_rmse_x100": s.sd_rmse_x100,
                    }
                    for est, s in c.estimators.items()
                },
                "win_linf": c.win_linf,
                "win_rmse": c.win_rmse,
                "win_basis": c.win_basis,
                "lambda_mean_x100": c.lambda_mean_x100,
                "lambda_sd_x100": c.lambda_sd_x100,
                "fgls_undefined": c.fgls_undefined,
                "errors": c.errors,
            }
            for c in report.cells
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def parse_report(text: str) -> McReport:
    """Inverse of render_table(..., 'json') (raw rows are a separate log)."""
    payload = json.loads(text)
    cells = []
    for c in payload["cells"]:
        cells.append(
            CellReport(
                c["design"], c["n"], c["t"], c["n_reps"],
                {est: EstimatorStats(**s) for est, s in c["estimators"].items()},
                c["win_linf"], c["win_rmse"], c["win_basis"],
                c["lambda_mean_x100"], c["lambda_sd_x100"],
                c["fgls_undefined"], list(c["errors"]),
            )
        )
    return McReport(payload["seed"], payload["n_reps"], cells)


def _render_text(report: McReport) -> str:
    lines = []
    designs = []
    for cell in report.cells:
        if cell.design not in designs:
            designs.append(cell.design)
    for design in designs:
        cells = [c for c in report.cells if c.design == design]
        header = [f"N={c.n},T={c.t}" for c in cells]
        lines.append(design)
        for metric, mean_attr, sd_attr in (
            ("linf x100", "mean_linf_x100", "sd_linf_x100"),
            ("RMSE x100", "mean_rmse_x100", "sd_rmse_x100"),
        ):
            lines.append("  " + metric)
            lines.append("  " + _pad(["estimator"] + header))
            shown = [
                est for est in ESTIMATORS
                if any(est in c.estimators for c in cells)
                or (est == "FGLS" and any(c.fgls_undefined for c in cells))
            ]
            for est in shown:
                row = [est]
                for c in cells:
                    s = c.estimators.get(est)
                    if s is None:
                        row.append("undefined" if (est == "FGLS" and c.fgls_undefined) else "")
                    else:
                        row.append(f"{getattr(s, mean_attr):.2f} ({getattr(s, sd_attr):.2f})")
                lines.append("  " + _pad(row))
            win_attr = "win_linf" if metric.startswith("linf") else "win_rmse"
            wins = [getattr(c, win_attr) for c in cells]
            if any(w is not None for w in wins):
                row = ["Percentage"] + ["" if w is None else str(w) for w in wins]
                lines.append("  " + _pad(row))
        lam_row = ["lambda x100"]
        has_lambda = False
        for c in cells:
            if c.lambda_mean_x100 is None:
                lam_row.append("")
            else:
                has_lambda = True
                lam_row.append(f"{c.lambda_mean_x100:.2f} ({c.lambda_sd_x100:.2f})")
        if has_lambda:
            lines.append("  " + _pad(lam_row))
        lines.append("")
    return "\n".join(lines)


def _pad(cells: list[str], width: int = 18) -> str:
    return "".join(str(c).ljust(width) for c in cells)


def write_raw_log(records: list[RepRecord], path) -> None:
    """Raw log: one CSV row per (design, N, T, rep, estimator)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "design", "n", "t", "rep", "estimator", "linf", "rmse",
            "selected_lambda", "solver_sweeps", "wall_time", "error",
        ])
        for r in records:
            writer.writerow([
                r.design, r.n, r.t, r.rep, r.estimator,
                _fmt(r.linf), _fmt(r.rmse), _fmt(r.selected_lambda),
                _fmt(r.solver_sweeps), repr(r.wall_time), r.error or "",
            ])
