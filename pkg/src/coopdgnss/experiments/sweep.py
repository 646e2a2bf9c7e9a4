"""Monte Carlo parameter sweeps and their CSV artifacts.

Each sweep point rebuilds the network model at one value of the swept
parameter, runs the configured number of simulate→estimate trials, and
reports the empirical position RMSE of user 1 of the constrained cluster
next to its bound and the three reference bounds (non-cooperative, ideal
base, large-crowd asymptote).

Determinism: every trial draws from SeedSequence(master_seed,
spawn_key=(point_index, trial_index)), so results are a pure function of
(config, master_seed) regardless of chunking or worker count.  Sweep points
whose visibility cannot support the state dimension are emitted as marked
rows (value and trial count only) and the run continues.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import NumericalError, SolvabilityError
from ..estimators import AmbiguityResolver, LinearWlsSolver, _stack_carrier_model
from ..bounds import rmse_bound
from ..simulator import sample_truth, synthesize_raw, to_dd, to_sd
from .config import SweepConfig
from .scenario import Scenario

__all__ = [
    "SweepRow",
    "run_cdgnss_sweep",
    "run_crtk_sweep",
    "bounds_rows",
    "emit_csv",
    "emit_bounds_csv",
    "read_rows",
    "first_trial_observations",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "swept_param",
    "swept_value",
    "rmse_wls_m",
    "rmse_crb_m",
    "rmse_noncoop_m",
    "rmse_ideal_m",
    "rmse_asymptotic_m",
    "success_rate",
    "trials",
)

# Trials per batched linear solve; a memory/throughput knob with no effect
# on results.
CHUNK = 512


@dataclasses.dataclass(frozen=True)
class SweepRow:
    """One sweep point's empirical and bound summary (user 1, meters).

    ``success_rate`` is None for code-only sweeps.  A point whose geometry
    cannot support the state dimension keeps only the swept value, with
    trials_used = 0 and every other field None.
    """

    swept_param: str
    swept_value: float
    rmse_wls: float | None
    rmse_crb: float | None
    rmse_noncoop: float | None
    rmse_ideal: float | None
    rmse_asymptotic: float | None
    success_rate: float | None
    trials_used: int

    def __post_init__(self) -> None:
        if self.success_rate is not None and not 0.0 <= self.success_rate <= 1.0:
            raise ValueError("success_rate must lie in [0, 1]")
        for name in ("rmse_wls", "rmse_crb", "rmse_noncoop", "rmse_ideal",
                     "rmse_asymptotic"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")


def _unsolvable_row(cfg: SweepConfig, value) -> SweepRow:
    return SweepRow(cfg.vary, value, None, None, None, None, None, None, 0)


def _trial_seeds(cfg: SweepConfig, point: int, trial: int):
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(point, trial))
    return ss.spawn(2)


def _draw_trial(cfg: SweepConfig, scn: Scenario, point: int, trial: int):
    truth_seed, noise_seed = _trial_seeds(cfg, point, trial)
    truth = sample_truth(scn.spec, scn.geometry, truth_seed)
    raw = synthesize_raw(scn.geometry, scn.spec, truth, noise_seed, scn.split)
    return truth, raw


def _check_band(rmse: float, crb: float, trials: int, value) -> None:
    """Empirical RMSE must sit within the Monte Carlo band of its bound
    (~3 standard errors of the RMSE statistic, with headroom)."""
    band = 3.0 * math.sqrt(3.0) / math.sqrt(2.0 * trials)
    if abs(rmse - crb) > band * crb:
        raise NumericalError(
            f"empirical RMSE {rmse:.6g} deviates from bound {crb:.6g} by more "
            f"than {band:.2%} at swept value {value}; estimator and bound "
            f"disagree"
        )


def _cdgnss_point(cfg: SweepConfig, g, point: int, value) -> SweepRow:
    spec = cfg.spec_at(value)
    scn = Scenario(spec, g)
    try:
        scn.check_solvable()
    except SolvabilityError:
        log.warning("sweep point %s=%s unsolvable; row marked", cfg.vary, value)
        return _unsolvable_row(cfg, value)

    solver = LinearWlsSolver(scn.G_sd, scn.R_sd_code)
    M = cfg.trials
    sq_err = 0.0
    for lo in range(0, M, CHUNK):
        trials = range(lo, min(lo + CHUNK, M))
        cols, true_pos = [], []
        for t in trials:
            truth, raw = _draw_trial(cfg, scn, point, t)
            cols.append(to_sd(raw).code)
            true_pos.append(truth.positions[1])
        X = solver.solve_batch(np.column_stack(cols))
        err = X[:3, :] - np.asarray(true_pos).T
        sq_err += float(np.sum(err * err))
    rmse = math.sqrt(sq_err / M)

    crb = rmse_bound(scn.user1_position_crb())
    noncoop, ideal, asymptotic = scn.benchmark_rmse()
    _check_band(rmse, crb, M, value)
    return SweepRow(cfg.vary, value, rmse, crb, noncoop, ideal, asymptotic, None, M)


def _crtk_point(cfg: SweepConfig, g, point: int, value) -> SweepRow:
    spec = cfg.spec_at(value)
    scn = Scenario(spec, g)
    try:
        scn.check_solvable()
    except SolvabilityError:
        log.warning("sweep point %s=%s unsolvable; row marked", cfg.vary, value)
        return _unsolvable_row(cfg, value)

    float_solver = LinearWlsSolver(
        _stack_carrier_model(scn.B_dd, scn.A_dd), scn.R_crtk
    )
    fix_solver = LinearWlsSolver(np.vstack([scn.B_dd, scn.B_dd]), scn.R_crtk)
    n_base = scn.B_dd.shape[1]
    Q_a = float_solver.covariance()[n_base:, n_base:]
    resolver = AmbiguityResolver(Q_a, method=cfg.ils_method)
    s1 = scn.user1_dd_slice

    M = cfg.trials
    sq_err = 0.0
    n_success = 0
    for lo in range(0, M, CHUNK):
        trials = range(lo, min(lo + CHUNK, M))
        cols, true_pos, true_amb = [], [], []
        for t in trials:
            truth, raw = _draw_trial(cfg, scn, point, t)
            cols.append(to_dd(to_sd(raw), scn.pivot).stacked)
            true_pos.append(truth.positions[1])
            true_amb.append(scn.true_dd_ambiguities(truth))
        Y = np.column_stack(cols)
        X = float_solver.solve_batch(Y)
        fixed = np.column_stack(
            [resolver.resolve(X[n_base:, j]) for j in range(Y.shape[1])]
        )
        hits = np.all(fixed[s1, :] == np.asarray(true_amb).T[s1, :], axis=0)
        n_success += int(np.count_nonzero(hits))

        Y_fix = Y.copy()
        Y_fix[scn.n_dd :, :] -= scn.A_dd @ fixed
        X_fix = fix_solver.solve_batch(Y_fix)
        pos = np.where(hits[None, :], X_fix[:3, :], X[:3, :])
        err = pos - np.asarray(true_pos).T
        sq_err += float(np.sum(err * err))
    rmse = math.sqrt(sq_err / M)

    crb = rmse_bound(scn.user1_float_crb())
    noncoop, ideal, asymptotic = scn.benchmark_rmse()
    return SweepRow(
        cfg.vary, value, rmse, crb, noncoop, ideal, asymptotic, n_success / M, M
    )


_POINT_FN = {"cdgnss": _cdgnss_point, "crtk": _crtk_point}


def _point_task(args):
    cfg, g, point, value = args
    return _POINT_FN[cfg.pipeline](cfg, g, point, value)


def _run_sweep(cfg: SweepConfig, workers: int) -> list:
    g = cfg.geometry()
    tasks = [(cfg, g, i, v) for i, v in enumerate(cfg.values())]
    if workers <= 1:
        return [_point_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_point_task, tasks))


def run_cdgnss_sweep(cfg: SweepConfig, workers: int = 1) -> list:
    """Code-only sweep: per point, M trials of simulate → WLS, user-1
    position RMSE against its bound and the three reference bounds."""
    if cfg.pipeline != "cdgnss":
        raise ValueError("config pipeline is not 'cdgnss'")
    return _run_sweep(cfg, workers)


def run_crtk_sweep(cfg: SweepConfig, workers: int = 1) -> list:
    """Carrier sweep: per point, M trials of simulate → float solve →
    integer resolution → fixed solve.  success_rate counts trials whose
    resolved integers match user 1's true ambiguity subvector exactly;
    each trial's position error uses the fixed solution on success and the
    float solution otherwise.  rmse_crb reports the float bound."""
    if cfg.pipeline != "crtk":
        raise ValueError("config pipeline is not 'crtk'")
    return _run_sweep(cfg, workers)


def bounds_rows(cfg: SweepConfig) -> list:
    """Bound-only rows over the sweep grid (no trials): rmse_crb and the
    reference bounds, with the empirical fields left empty."""
    g = cfg.geometry()
    rows = []
    for value in cfg.values():
        scn = Scenario(cfg.spec_at(value), g)
        try:
            scn.check_solvable()
        except SolvabilityError:
            rows.append(_unsolvable_row(cfg, value))
            continue
        if cfg.pipeline == "crtk":
            crb = rmse_bound(scn.user1_float_crb())
        else:
            crb = rmse_bound(scn.user1_position_crb())
        noncoop, ideal, asymptotic = scn.benchmark_rmse()
        rows.append(
            SweepRow(cfg.vary, value, None, crb, noncoop, ideal, asymptotic, None, 0)
        )
    return rows


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(rows, path) -> None:
    """Write sweep rows with the fixed column set; floats use shortest
    round-trip formatting so identical runs yield byte-identical files."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.swept_param,
                    _cell(r.swept_value),
                    _cell(r.rmse_wls),
                    _cell(r.rmse_crb),
                    _cell(r.rmse_noncoop),
                    _cell(r.rmse_ideal),
                    _cell(r.rmse_asymptotic),
                    _cell(r.success_rate),
                    str(r.trials_used),
                ]
            )


def emit_bounds_csv(rows, path) -> None:
    """Write bound-only rows (same column set; empirical fields empty)."""
    emit_csv(rows, path)


def _parse_cell(s: str):
    return None if s == "" else float(s)


def read_rows(path) -> list:
    """Parse an emitted CSV back into SweepRow values (floats round-trip
    bit-exactly)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns {header}")
        rows = []
        for rec in reader:
            value = float(rec[1]) if "." in rec[1] or "e" in rec[1] else int(rec[1])
            rows.append(
                SweepRow(
                    rec[0],
                    value,
                    *(_parse_cell(c) for c in rec[2:8]),
                    int(rec[8]),
                )
            )
        return rows


def first_trial_observations(cfg: SweepConfig) -> list:
    """Raw, single-difference, and double-difference observation sets for
    the first trial of the first sweep point (diagnostic dump)."""
    g = cfg.geometry()
    scn = Scenario(cfg.spec_at(cfg.values()[0]), g)
    _, raw = _draw_trial(cfg, scn, 0, 0)
    sd = to_sd(raw)
    dd = to_dd(sd, scn.pivot)
    return [raw, sd, dd]
