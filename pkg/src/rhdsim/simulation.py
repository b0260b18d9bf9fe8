"""Time loop: Picard steps, per-step diagnostics records, checkpoints."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import hydro
from . import radiation as rad
from .checkpoint import write_checkpoint
from .config import ScenarioConfig, build_model, initial_data
from .coupler import Iterate, Model, PicardConfig, advance
from .hydro import AdvectionCFLError, TangencyError
from .linsolve import LinearSolverError

log = logging.getLogger(__name__)

COLUMNS = (
    "step", "time", "dt", "picard_iterations", "picard_lambda", "picard_converged",
    "mass", "rho_min", "rho_max", "theta_min", "theta_max", "u_max",
    "I_min", "I_max", "radiation_energy", "total_energy", "energy_residual",
    "grad_I_norm", "composite", "G_L2", "G_inf", "omega_L2", "omega_inf", "bkm_integrand", "bkm_ratio",
    "transport_clamp", "theta_clamp", "tripped",
)

NUMERICAL_ERRORS = (LinearSolverError, rad.TransportCFLError, rad.CoefficientError, AdvectionCFLError,
                    TangencyError, FloatingPointError)


def format_value(v) -> str:
    """Locale-independent, shortest round-trip text for one CSV cell."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class DiagnosticsWriter:
    """Writes records to CSV in arrival order with a fixed header."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="", encoding="ascii")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(COLUMNS)

    def write(self, record: dict) -> None:
        self._w.writerow([format_value(record[c]) for c in COLUMNS])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def make_record(step: int, t: float, dt: float, it: Iterate, model: Model, *, report=None, ledger=None,
                info=None, threshold=None, running=None, bkm_q: float = 6.0) -> dict:
    grid, setup, p = model.grid, model.setup, model.params
    b = diag.blowup_monitor(it.I, it.rho, it.u, it.theta, setup, p, threshold, running)
    nan = math.nan
    return {
        "step": step, "time": t, "dt": dt,
        "picard_iterations": report.iterations if report else 0,
        "picard_lambda": report.lambdas[-1] if report else nan,
        "picard_converged": bool(report.converged) if report else True,
        "mass": float(np.sum(it.rho)) * grid.cell_volume,
        "rho_min": float(it.rho.min()), "rho_max": float(it.rho.max()),
        "theta_min": float(it.theta.min()), "theta_max": float(it.theta.max()),
        "u_max": float(np.max(np.sqrt(np.sum(it.u**2, axis=0)))),
        "I_min": float(it.I.min()), "I_max": float(it.I.max()),
        "radiation_energy": float(np.sum(rad.radiation_moments(it.I, setup.quad, setup.c_light).E_r)) * grid.cell_volume,
        "total_energy": diag.total_energy(it, setup, p),
        "energy_residual": ledger.residual if ledger else nan,
        "grad_I_norm": b.grad_I_norm if b.grad_I_running is None else b.grad_I_running,
        "composite": b.composite,
        "G_L2": b.G_norms[0], "G_inf": b.G_norms[1],
        "omega_L2": b.omega_norms[0], "omega_inf": b.omega_norms[1],
        "bkm_integrand": b.bkm_integrand,
        "bkm_ratio": diag.bkm_ratio(it.u, grid, bkm_q)["ratio"],
        "transport_clamp": info.transport_clamp if info else 0.0,
        "theta_clamp": info.theta_clamp if info else 0.0,
        "tripped": b.tripped,
    }


@dataclass
class RunResult:
    status: str  # "completed", "blowup" or "failed"
    steps: int
    time: float
    iterate: Iterate
    records: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    error: str | None = None
    checkpoint: Path | None = None


def run_simulation(cfg: ScenarioConfig, csv_path=None, checkpoint_path=None, keep_records: bool = True) -> RunResult:
    """Advance the configured scenario to ``time.t_end``.

    Stops early when the blow-up composite exceeds
    ``diagnostics.blowup_threshold`` (status ``blowup``) or a subproblem
    fails (status ``failed``); both write a final checkpoint of the last
    accepted state if a checkpoint path is configured.
    """
    model = build_model(cfg)
    pic: PicardConfig = cfg.picard
    it, t0 = initial_data(cfg, model)
    tcfg, dcfg, out = cfg["time"], cfg["diagnostics"], cfg["output"]
    csv_path = csv_path if csv_path is not None else out["diagnostics_csv"]
    checkpoint_path = checkpoint_path if checkpoint_path is not None else out["checkpoint"]
    threshold = dcfg["blowup_threshold"]
    running = np.zeros((model.setup.quad.n_groups, model.setup.quad.n_ordinates)) if dcfg["running_max"] else None
    if model.check_tangency:
        try:
            hydro.tangency_residual(it.u, model.grid)
        except TangencyError as exc:
            log.error("initial velocity: %s", exc)
            return RunResult("failed", 0, t0, it, error=f"TangencyError: {exc}")
    writer = DiagnosticsWriter(csv_path) if csv_path else None
    dt0 = float(tcfg["dt"])
    t_end = float(tcfg["t_end"])
    n_steps = max(0, math.ceil((t_end - t0) / dt0 - 1e-9))

    def save(state_it: Iterate, t: float):
        if checkpoint_path:
            write_checkpoint(state_it.to_state(t), state_it.I, checkpoint_path, model.grid.lengths)
            return Path(checkpoint_path)
        return None

    result = RunResult("completed", 0, t0, it)
    try:
        rec = make_record(0, t0, 0.0, it, model, threshold=threshold, running=running, bkm_q=dcfg["bkm_q"])
        _emit(result, writer, rec, keep_records)
        t = t0
        for k in range(1, n_steps + 1):
            dt = min(dt0, t_end - t) if k == n_steps else dt0
            try:
                with np.errstate(over="raise", invalid="raise", divide="raise"):
                    step = advance(it, t, dt, pic, model, tcfg["max_halvings"])
            except NUMERICAL_ERRORS as exc:
                result.status, result.error = "failed", f"{type(exc).__name__}: {exc}"
                result.checkpoint = save(it, t)
                log.error("step %d failed at t=%g: %s", k, t, exc)
                return result
            ledger = diag.energy_ledger(it, step.iterate, dt, model.setup, model.params)
            it = step.iterate
            t = t0 + k * dt0 if k < n_steps else t_end
            result.reports.extend(step.reports)
            last = step.reports[-1]
            merged = type(last)(sum(r.iterations for r in step.reports), last.lambdas, step.converged)
            rec = make_record(k, t, dt, it, model, report=merged, ledger=ledger, info=step.info,
                              threshold=threshold, running=running, bkm_q=dcfg["bkm_q"])
            _emit(result, writer, rec, keep_records)
            result.steps, result.time, result.iterate = k, t, it
            if not step.converged:
                log.warning("picard not converged at step %d (last lambda %.3e)", k, last.lambdas[-1])
            if rec["tripped"]:
                result.status = "blowup"
                result.checkpoint = save(it, t)
                return result
            every = out["checkpoint_every"]
            if every and k % every == 0:
                save(it, t)
        result.checkpoint = save(it, t)
        return result
    finally:
        if writer:
            writer.close()


def _emit(result: RunResult, writer, rec: dict, keep: bool):
    if keep:
        result.records.append(rec)
    if writer:
        writer.write(rec)
