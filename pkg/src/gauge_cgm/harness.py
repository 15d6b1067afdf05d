"""Synthetic sensing problems, single experiments and parameter sweeps."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
import csv
import io
import math
from pathlib import Path

import numpy as np

from .atoms import make_atom_set
from .config import ExperimentConfig, config_from_kv, expand_grid
from .losses import QuadraticLoss
from .screening import f1_score
from .solver import SolverConfig, final_residual, objective, run

CSV_HEADER = ("iter", "objective", "residual", "sigma", "atom_id", "xi",
              "screen_threshold", "survivor_count", "f1", "support_size", "status")
COEFF_REL_TOL = 1e-6


@dataclass
class SensingProblem:
    A: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    true_support: set      # signed-basis atom ids: 2j for x0_j > 0, 2j+1 below
    eta: float
    seed: int


def make_rng(seed):
    """PCG64 stream seeded through SeedSequence; stable across platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def gen_sensing(m, n, sparsity, eta, seed):
    """``A_ij ~ N(0, 1/n)``, ``x0`` with ``sparsity`` N(0,1) entries and
    ``b ~ N(A x0, eta)`` (``eta`` is the noise variance)."""
    if not 0 < sparsity <= n:
        raise ValueError("need 0 < sparsity <= n")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    rng = make_rng(seed)
    A = rng.normal(0.0, 1.0 / math.sqrt(n), size=(m, n))
    idx = np.sort(rng.choice(n, size=sparsity, replace=False))
    x0 = np.zeros(n)
    x0[idx] = rng.standard_normal(sparsity)
    b = A @ x0
    if eta > 0:
        b = b + math.sqrt(eta) * rng.standard_normal(m)
    support = {2 * int(j) + (1 if x0[j] < 0 else 0) for j in idx if x0[j] != 0}
    return SensingProblem(A, b, x0, support, eta, seed)


def build(config):
    """Loss, atom set, solver config and true support (or None)."""
    if config.A is not None:
        A, b, truth = config.A, config.b, None
        scale = config.loss_scale if config.loss_scale is not None else 0.5
    else:
        prob = gen_sensing(config.m, config.n, config.sparsity, config.eta, config.seed)
        A, b = prob.A, prob.b
        truth = prob.true_support if config.gauge_kind == "SignedBasis" else None
        scale = config.loss_scale if config.loss_scale is not None else 1.0 / (2 * A.shape[0])
    loss = QuadraticLoss(A, b, scale)
    gauge = make_atom_set(config.gauge_kind, A.shape[1], groups=config.groups,
                          map_matrix=config.map_matrix)
    solver_cfg = SolverConfig(
        gauge=gauge, phi=replace(config.phi, scale=config.lam), gamma=config.gamma,
        max_iter=config.max_iter, screening=config.screen, epsilon0=config.eps0,
        record_history=False)
    return loss, gauge, solver_cfg, truth


def coefficient_support(c):
    cmax = float(np.max(c)) if c.size else 0.0
    if cmax <= 0:
        return set()
    return set(np.flatnonzero(c > COEFF_REL_TOL * cmax).tolist())


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def run_experiment(config: ExperimentConfig):
    """Rows (tuples in ``CSV_HEADER`` order), the last being the summary.

    The summary row reports the final objective and residual, the F1 and size
    of the final support, and in the ``iter`` column the iteration at which
    the cumulative screen set last changed (0 without screening).
    """
    rows = []
    try:
        loss, gauge, solver_cfg, truth = build(config)
    except Exception as exc:  # bad cell in a sweep: report, do not raise
        return [_summary_row(0, math.nan, math.nan, -1, math.nan, 0,
                             "error: %s: %s" % (type(exc).__name__, exc))]
    every = max(1, config.record_every)
    n_atoms = gauge.n_atoms

    def current_support(state, screen):
        if screen is not None:
            return screen.cumulative
        return coefficient_support(state.c)

    def callback(t, state, rec, screen):
        if t % every and t != config.max_iter:
            return
        sup = current_support(state, screen)
        f1 = f1_score(sup, truth) if truth is not None else math.nan
        rows.append((t, rec.objective, rec.residual, rec.sigma, rec.atom_id, rec.xi,
                     rec.screen_threshold, rec.survivor_count, f1, len(sup), "ok"))

    try:
        result = run(solver_cfg, loss, callback=callback)
    except Exception as exc:
        last = rows[-1] if rows else None
        rows.append(_summary_row(
            last[0] if last else 0, last[1] if last else math.nan,
            last[2] if last else math.nan, n_atoms, math.nan, 0,
            "error: %s: %s" % (type(exc).__name__, exc)))
        return rows
    st = result.state
    sup = current_support(st, result.screen)
    f1 = f1_score(sup, truth) if truth is not None else math.nan
    obj = objective(st, loss, solver_cfg.phi)
    res = final_residual(result, loss, solver_cfg.phi, gauge)
    stable = result.screen.last_change if result.screen is not None else 0
    survivors = int(result.screen.survivors_mask.sum()) if result.screen is not None \
        else n_atoms
    rows.append(_summary_row(stable, obj, res, survivors, f1, len(sup), "summary"))
    return rows


def _summary_row(t, obj, res, survivors, f1, size, status):
    return (t, obj, res, math.nan, -1, math.nan, math.nan, survivors, f1, size, status)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def cell_name(params):
    if not params:
        return "run"
    return "_".join("%s=%s" % (k, v) for k, v in params.items())


def experiment_filename(config, params=None):
    """Per-run CSV name; lambda always appears in it."""
    params = dict(params or {})
    if "lambda" not in params:
        params = {"lambda": _fmt(config.lam), **params}
    return "run_" + cell_name(params) + ".csv"


def _run_cell(args):
    kv, base_dir = args
    try:
        cfg = config_from_kv(kv, base_dir)
    except Exception as exc:
        return [_summary_row(0, math.nan, math.nan, -1, math.nan, 0,
                             "error: %s: %s" % (type(exc).__name__, exc))]
    return run_experiment(cfg)


def sweep(base_kv, grid, base_dir=".", jobs=1, overrides=None):
    """Run every grid cell; returns ``[(params, rows)]`` in grid order.

    ``overrides`` (key -> string) is applied on top of every cell.
    """
    cells = expand_grid(base_kv, grid)
    work = []
    for params, kv in cells:
        if overrides:
            kv.update(overrides)
        work.append((kv, str(base_dir)))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    return [(params, rows) for (params, _), rows in zip(cells, results)]


def write_sweep(results, out_dir, base_kv):
    """One CSV per cell plus ``summary.csv`` with the grid parameters prepended."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    keys = list(results[0][0]) if results else []
    summary = []
    for params, rows in results:
        p = dict(params)
        if "lambda" not in p:
            p = {"lambda": base_kv.get("lambda", "1e-5"), **p}
        (out_dir / ("run_" + cell_name(p) + ".csv")).write_text(rows_to_csv(rows))
        summary.append(rows[-1])
    header = tuple(keys) + CSV_HEADER
    lines = [",".join(header)]
    for (params, _), row in zip(results, summary):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [params[k] for k in keys] + [_fmt(v) for v in row])
        lines.append(buf.getvalue())
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n")
    return out_dir / "summary.csv"
