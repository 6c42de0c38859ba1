"""Error-scaling study on delayed two-agent quadratic problems, plus a
generic grid-sweep runner.

The study measures how the size of the final iterate scales with the
persistent error bound eps when the two agents read each other through
stale-refresh delays.  Each sample run fixes a random problem instance
(two positive-definite matrices and a start point) that is shared across
the whole eps grid and across refresh probabilities, so comparisons along
those axes are paired.  Per-cell seeds are derived from the sample seed
and the position of eps in the canonical grid, which makes every cell
reproducible in isolation.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._rng import DOMAIN_INSTANCE, stream
from .config import (
    QuadraticObjective,
    RunConfig,
    SweepSpec,
    parse_run_config,
    set_by_path,
)
from .core import build_runtime, run_light
from .errors import ConfigError, DivergenceError
from .fields import random_pd_matrix
from .schedules import AllActive, HarmonicSteps
from .stochastics import ComponentUniformErrors, StaleRefreshDelays, ZeroNoise
from .trace import _fmt

__all__ = [
    "EPS_GRID",
    "AggregateResult",
    "sample_instance",
    "cell_config",
    "reproduce_experiment",
    "summarize",
    "write_aggregate_csv",
    "read_aggregate_csv",
    "emit_plot_data",
    "read_plot_data",
    "sweep_run",
    "write_sweep_csv",
]

AGGREGATE_SCHEMA = "aggregate-v1"
SWEEP_SCHEMA = "sweep-v1"

EPS_GRID = tuple(round(k / 10.0, 1) for k in range(2, 31))

_AGG_COLUMNS = (
    "run_id", "epsilon", "error_norm", "log_final_norm", "p_c", "seed", "status",
)

_STUDY_HORIZON = 1000
_STUDY_STEP_C = 10.0


def sample_instance(run_seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Problem instance for one sample run: two PD matrices and a start.

    Drawn from the instance stream of ``run_seed`` so the same instance
    is reused across the whole eps grid and across refresh probabilities.
    """
    rng = stream(run_seed, DOMAIN_INSTANCE)
    mat_a = random_pd_matrix(2, rng)
    mat_b = random_pd_matrix(2, rng)
    x0 = rng.uniform(-1.0, 1.0, 2)
    return mat_a, mat_b, x0


def cell_config(instance, eps: float, p_c: float, seed: int,
                horizon: int = _STUDY_HORIZON) -> RunConfig:
    mat_a, mat_b, x0 = instance
    return RunConfig(
        dimension=2,
        horizon=horizon,
        seed=seed,
        objective=QuadraticObjective(matrices=np.stack([mat_a, mat_b])),
        steps=HarmonicSteps(c=_STUDY_STEP_C),
        activation=AllActive(),
        delays=StaleRefreshDelays(p_c=p_c),
        errors=ComponentUniformErrors(bound=float(eps)),
        noise=ZeroNoise(),
        x0=np.asarray(x0, dtype=float),
    )


def _rows_for_seed(args) -> list[dict]:
    run_seed, p_c, eps_grid = args
    instance = sample_instance(run_seed)
    rows = []
    for idx, eps in enumerate(eps_grid):
        cfg = cell_config(instance, eps, p_c, seed=run_seed ^ idx)
        try:
            result = run_light(cfg)
            value = math.log(max(float(np.linalg.norm(result.final_x)), 1e-300))
            status = "ok"
        except DivergenceError:
            value = float("nan")
            status = "divergent"
        rows.append({
            "run_id": f"s{run_seed}-e{idx:02d}",
            "epsilon": float(eps),
            "error_norm": float(eps) * math.sqrt(2.0) / 2.0,
            "log_final_norm": value,
            "p_c": float(p_c),
            "seed": int(run_seed),
            "status": status,
        })
    return rows


@dataclass(eq=False)
class AggregateResult:
    p_c: float
    eps_grid: tuple
    seeds: tuple
    rows: list[dict]


def reproduce_experiment(p_c: float, seeds, eps_grid=EPS_GRID,
                         jobs: int = 1) -> AggregateResult:
    """Run the full eps grid for every sample seed at one refresh rate.

    The grid is sorted before cell seeds are derived from positions in
    it, so listing the same values in a different order cannot change
    any cell's draws.
    """
    seeds = tuple(int(s) for s in seeds)
    eps_grid = tuple(sorted(float(e) for e in eps_grid))
    work = [(s, float(p_c), eps_grid) for s in seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_rows_for_seed, work))
    else:
        chunks = [_rows_for_seed(w) for w in work]
    rows = [row for chunk in chunks for row in chunk]
    return AggregateResult(p_c=float(p_c), eps_grid=eps_grid, seeds=seeds,
                           rows=rows)


def summarize(result: AggregateResult) -> dict:
    """Scaling summary: rank correlation and tail medians of the rows."""
    ok = [r for r in result.rows if r["status"] == "ok"]
    eps = np.array([r["epsilon"] for r in ok])
    vals = np.array([r["log_final_norm"] for r in ok])
    rho, pvalue = stats.spearmanr(eps, vals)
    tail = vals[eps >= 1.0]
    per_eps = []
    for e in result.eps_grid:
        sel = vals[eps == e]
        per_eps.append({
            "epsilon": float(e),
            "median_log_final_norm": float(np.median(sel)) if sel.size else None,
            "runs": int(sel.size),
        })
    return {
        "schema": "scaling-summary-v1",
        "p_c": result.p_c,
        "seeds": list(result.seeds),
        "cells": len(result.rows),
        "divergent_cells": sum(r["status"] != "ok" for r in result.rows),
        "spearman_rho": float(rho),
        "spearman_p": float(pvalue),
        "pooled_median_tail": float(np.median(tail)) if tail.size else None,
        "per_eps_median": per_eps,
    }


def write_aggregate_csv(result: AggregateResult, path) -> None:
    meta = {
        "p_c": result.p_c,
        "eps_grid": list(result.eps_grid),
        "seeds": list(result.seeds),
        "horizon": _STUDY_HORIZON,
        "step_c": _STUDY_STEP_C,
    }
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {AGGREGATE_SCHEMA}\n")
        fh.write(f"# config: {json.dumps(meta, sort_keys=True)}\n")
        writer = csv.writer(fh)
        writer.writerow(_AGG_COLUMNS)
        for r in result.rows:
            writer.writerow([
                r["run_id"],
                _fmt(r["epsilon"]),
                _fmt(r["error_norm"]),
                _fmt(r["log_final_norm"]),
                _fmt(r["p_c"]),
                r["seed"],
                r["status"],
            ])


def read_aggregate_csv(path) -> tuple[dict, list[dict]]:
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        header_seen = False
        for record in csv.reader(_strip_comments(fh, meta)):
            if not header_seen:
                if tuple(record) != _AGG_COLUMNS:
                    raise ConfigError(f"{path}: unexpected aggregate columns")
                header_seen = True
                continue
            rows.append({
                "run_id": record[0],
                "epsilon": float(record[1]),
                "error_norm": float(record[2]),
                "log_final_norm": float(record[3]),
                "p_c": float(record[4]),
                "seed": int(record[5]),
                "status": record[6],
            })
    return meta, rows


def _strip_comments(fh, meta: dict):
    for line in fh:
        if line.startswith("# "):
            key, _, value = line[2:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        yield line


def emit_plot_data(result: AggregateResult, path, style: str = "wide") -> None:
    """Plot-ready table: per-eps medians wide, or one row per cell long."""
    if style not in ("wide", "long"):
        raise ConfigError(f"unknown plot style {style!r}")
    ok = [r for r in result.rows if r["status"] == "ok"]
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: plot-{style}-v1\n")
        writer = csv.writer(fh)
        if style == "long":
            writer.writerow(["epsilon", "seed", "log_final_norm"])
            for r in sorted(ok, key=lambda r: (r["epsilon"], r["seed"])):
                writer.writerow([
                    _fmt(r["epsilon"]), r["seed"], _fmt(r["log_final_norm"]),
                ])
            return
        seeds = list(result.seeds)
        writer.writerow(["epsilon"] + [f"s{s}" for s in seeds] + ["median"])
        by_cell = {(r["epsilon"], r["seed"]): r["log_final_norm"] for r in ok}
        for e in result.eps_grid:
            vals = [by_cell.get((e, s)) for s in seeds]
            present = [v for v in vals if v is not None]
            writer.writerow(
                [_fmt(e)]
                + ["" if v is None else _fmt(v) for v in vals]
                + [_fmt(float(np.median(present))) if present else ""]
            )


def read_plot_data(path) -> dict:
    with open(path, newline="") as fh:
        schema_line = fh.readline().strip()
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    return {"schema": schema_line.removeprefix("# schema: "),
            "columns": header, "rows": rows}


# ---------------------------------------------------------------------------
# generic sweeps


def _sweep_cell(args) -> dict:
    base, cell, aggregate = args
    probe = json.loads(json.dumps(base))
    for path, value in cell["overrides"].items():
        set_by_path(probe, path, value)
    probe["seed"] = cell["seed"]
    cfg = parse_run_config(probe)
    row = {
        "index": cell["index"],
        **cell["overrides"],
        "replicate": cell["replicate"],
        "seed": cell["seed"],
    }
    try:
        result = run_light(cfg)
        final = result.final_x
        if aggregate == "final-norm":
            value = float(np.linalg.norm(final))
        elif aggregate == "log-final-norm":
            value = math.log(max(float(np.linalg.norm(final)), 1e-300))
        else:
            field = build_runtime(cfg).field
            value = float(np.linalg.norm(field.vector(final)))
        row.update(value=value, status="ok")
    except DivergenceError:
        row.update(value=float("nan"), status="divergent")
    return row


def sweep_run(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """Execute every sweep cell; row order and content are canonical."""
    work = [(spec.base, cell, spec.aggregate) for cell in spec.cells()]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_cell, work))
    return [_sweep_cell(w) for w in work]


def write_sweep_csv(spec: SweepSpec, rows: list[dict], path) -> None:
    axes = sorted(spec.parameters)
    meta = {
        "aggregate": spec.aggregate,
        "parameters": {k: list(v) for k, v in spec.parameters.items()},
        "replicates": spec.replicates,
    }
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SWEEP_SCHEMA}\n")
        fh.write(f"# config: {json.dumps(meta, sort_keys=True)}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", *axes, "replicate", "seed", "value", "status"])
        for r in rows:
            writer.writerow([
                r["index"],
                *(
                    _fmt(r[a]) if isinstance(r[a], float) else r[a]
                    for a in axes
                ),
                r["replicate"],
                r["seed"],
                _fmt(r["value"]),
                r["status"],
            ])
