"""Config-driven sweep runner with deterministic seeding and CSV/JSON output.

Each grid cell (N, gamma, ell, replica) is an independent task seeded by a
hash of the master seed and the cell coordinates, so results do not depend
on scheduling.  Failed cells are isolated: their error goes to the manifest
and every completed cell is still written.

CSV schema (long format, one row per metric):

    experiment,N,gamma,ell,target_kind,kappa,s,a,replica,seed,metric,value,stderr,wall_ms

Every row echoes the full cell configuration, so any single row suffices to
re-run its cell.  The wall_ms column is left empty: per-cell timings live in
the manifest, keeping the CSV a pure function of (config, master_seed).
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import math
import time
import traceback
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig, _canonical_dict, config_hash
from .diagnostics import esjd, limiting_alpha, sample_q_values
from .kernels import KernelParams, RecordingPolicy, run_chain, stationary_start
from .limits import autocorrelation, acf_rate_fit, coord_path, euler_spde, AcfFitError
from .spectral import CovarianceSpectrum, trace_sobolev
from .targets import TargetModel

__all__ = ["seed_for", "run_experiment", "ExperimentSummary", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "experiment", "N", "gamma", "ell", "target_kind", "kappa", "s", "a",
    "replica", "seed", "metric", "value", "stderr", "wall_ms",
)

# Number of autocorrelation lags exported for overlay plots.
_ACF_EXPORT_LAGS = 48


def seed_for(master_seed: int, n: int, gamma: str, ell: float, replica: int) -> int:
    """Collision-resistant 64-bit seed for one grid cell.

    Hash of the exact cell coordinates; gamma enters as its canonical
    rational string so the derivation is stable across releases.
    """
    payload = f"{int(master_seed)}|{int(n)}|{gamma}|{float(ell)!r}|{int(replica)}"
    digest = hashlib.sha256(payload.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class Cell:
    n: int
    gamma: str
    ell: float
    replica: int

    def sort_key(self):
        return (self.n, Fraction(self.gamma), self.ell, self.replica)


@dataclass
class ExperimentSummary:
    csv_path: Path
    manifest_path: Path
    n_rows: int
    n_cells: int
    failures: list
    wall_ms: float


def _policy_for(cfg: ExperimentConfig) -> RecordingPolicy:
    if cfg.recording == "full":
        return RecordingPolicy(states_stride=1, thin=cfg.thinning)
    if cfg.recording == "thinned":
        return RecordingPolicy(states_stride=cfg.thinning, thin=cfg.thinning)
    return RecordingPolicy(states_stride=0, thin=cfg.thinning)


def _cell_setup(cfg: ExperimentConfig, cell: Cell):
    spec = CovarianceSpectrum(cfg.kappa, cell.n)
    model = TargetModel(spec, psi_kind=cfg.psi, s=cfg.s, a=cfg.a)
    params = KernelParams(ell=cell.ell, gamma=float(Fraction(cell.gamma)), n_dim=cell.n)
    rng = np.random.default_rng(seed_for(cfg.master_seed, cell.n, cell.gamma,
                                         cell.ell, cell.replica))
    return spec, model, params, rng


def _chain_rows(cfg: ExperimentConfig, cell: Cell, with_theory: bool,
                with_speed: bool) -> list:
    spec, model, params, rng = _cell_setup(cfg, cell)
    x0 = stationary_start(model, params, rng, burn_in=cfg.burn_in or None,
                          kernel=cfg.kernel)
    trace = run_chain(x0, model, params, cfg.n_steps, rng,
                      record=_policy_for(cfg), kernel=cfg.kernel)
    acc = trace.acceptance_rate
    rows = [
        ("acceptance", acc, math.sqrt(max(acc * (1 - acc), 0.0) / cfg.n_steps)),
        ("esjd", esjd(trace, r=cfg.s), ""),
    ]
    if with_speed:
        norm = 2.0 * params.dt * trace_sobolev(spec, cfg.s, cell.n)
        rows.append(("speed_emp", esjd(trace, r=cfg.s) / norm, ""))
    if with_theory and cfg.kernel == "mala":
        rows.append(("alpha_theory", limiting_alpha(cell.ell), ""))
        rows.append(("h_theory", cell.ell * limiting_alpha(cell.ell), ""))
    return rows


def _q_decomposition_rows(cfg: ExperimentConfig, cell: Cell) -> list:
    _, model, params, rng = _cell_setup(cfg, cell)
    study = sample_q_values(model, params, cfg.n_steps, rng)
    n = study.q.size
    rows = [
        ("q_mean", float(study.q.mean()), float(study.q.std(ddof=1) / math.sqrt(n))),
        ("q_var", float(study.q.var(ddof=1)), ""),
        ("z_mean", float(study.z_term.mean()), float(study.z_term.std(ddof=1) / math.sqrt(n))),
        ("z_var", float(study.z_term.var(ddof=1)), ""),
        ("i_abs_mean", float(np.abs(study.i_term).mean()),
         float(np.abs(study.i_term).std(ddof=1) / math.sqrt(n))),
        ("err_abs_mean", float(np.abs(study.err_term).mean()),
         float(np.abs(study.err_term).std(ddof=1) / math.sqrt(n))),
    ]
    rows.extend(("q_sample", float(q), "") for q in study.q)
    return rows


def _diffusion_limit_rows(cfg: ExperimentConfig, cell: Cell) -> list:
    _, model, params, rng = _cell_setup(cfg, cell)
    h = cell.ell * limiting_alpha(cell.ell)
    max_lag = 2.5 / h

    x0 = stationary_start(model, params, rng, burn_in=cfg.burn_in or None)
    trace = run_chain(x0, model, params, cfg.n_steps, rng,
                      record=RecordingPolicy(states_stride=0, thin=1))
    chain = coord_path(trace, params)

    T = cfg.n_steps * params.dt
    z0 = stationary_start(model, params, rng, burn_in=cfg.burn_in or None)
    spde = euler_spde(z0, model, h_speed=h, T=T, dt_integrator=params.dt / 4.0,
                      rng=rng, coords=(0,))

    rows = [("h_theory", h, "")]
    try:
        rows.append(("acf_rate_chain", acf_rate_fit(chain, 0, max_lag), ""))
        rows.append(("acf_rate_spde", acf_rate_fit(spde, 0, max_lag), ""))
    except AcfFitError as exc:
        raise RuntimeError(f"autocorrelation fit failed: {exc}")
    for name, path in (("acf_chain", chain), ("acf_spde", spde)):
        lags, acf = autocorrelation(path, 0, max_lag)
        stride = max(1, lags.size // _ACF_EXPORT_LAGS)
        for k in range(0, lags.size, stride):
            rows.append((f"{name}@{lags[k]:.6g}", float(acf[k]), ""))
    return rows


def _cell_rows(cfg: ExperimentConfig, cell: Cell) -> list:
    kind = cfg.experiment
    if kind in ("acceptance-sweep", "rwm-baseline"):
        return _chain_rows(cfg, cell, with_theory=False, with_speed=False)
    if kind == "gamma-scaling":
        return _chain_rows(cfg, cell, with_theory=True, with_speed=False)
    if kind in ("ell-curve", "esjd-sweep"):
        return _chain_rows(cfg, cell, with_theory=True, with_speed=True)
    if kind == "q-decomposition":
        return _q_decomposition_rows(cfg, cell)
    if kind == "diffusion-limit":
        return _diffusion_limit_rows(cfg, cell)
    raise ValueError(f"unknown experiment {kind!r}")


def _run_cell(args):
    """Worker entry point; never raises, returns an error record instead."""
    cfg, cell = args
    start = time.perf_counter()
    try:
        rows = _cell_rows(cfg, cell)
        error = None
    except Exception:
        rows = []
        error = traceback.format_exc(limit=8)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return cell, rows, error, wall_ms


def _cells(cfg: ExperimentConfig) -> list:
    out = [
        Cell(n=n, gamma=g, ell=ell, replica=rep)
        for n in cfg.n_grid
        for g in cfg.gamma_grid
        for ell in cfg.ell_grid
        for rep in range(cfg.replicas)
    ]
    return sorted(out, key=Cell.sort_key)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   output_dir: Optional[str] = None) -> ExperimentSummary:
    """Execute every grid cell and persist one CSV plus a JSON manifest.

    The CSV is byte-identical across re-runs with the same (config, seed),
    whether cells run serially or in a worker pool.  Per-cell failures are
    recorded in the manifest without aborting the sweep.
    """
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = _cells(cfg)
    tasks = [(cfg, cell) for cell in cells]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    results.sort(key=lambda r: r[0].sort_key())

    csv_path = out_dir / f"{cfg.experiment}.csv"
    n_rows = 0
    failures = []
    cell_records = []
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for cell, rows, error, wall_ms in results:
            seed = seed_for(cfg.master_seed, cell.n, cell.gamma, cell.ell, cell.replica)
            record = {
                "N": cell.n, "gamma": cell.gamma, "ell": cell.ell,
                "replica": cell.replica, "seed": seed,
                "status": "error" if error else "ok",
                "wall_ms": round(wall_ms, 3),
            }
            if error:
                record["error"] = error
                failures.append(record)
            cell_records.append(record)
            for metric, value, stderr in rows:
                writer.writerow([
                    cfg.experiment, cell.n, cell.gamma, _format(cell.ell),
                    cfg.psi, _format(cfg.kappa), _format(cfg.s), _format(cfg.a),
                    cell.replica, seed, metric, _format(value),
                    _format(stderr) if stderr != "" else "", "",
                ])
                n_rows += 1

    finished = datetime.now(timezone.utc)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    manifest = {
        "experiment": cfg.experiment,
        "config": _canonical_dict(cfg),
        "config_sha256": config_hash(cfg),
        "version": __version__,
        "started_at": started.isoformat(),
        "finished_at": finished.isoformat(),
        "wall_ms": round(wall_ms, 3),
        "csv": csv_path.name,
        "partial": bool(failures),
        "cells": cell_records,
    }
    manifest_path = out_dir / f"{cfg.experiment}.manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return ExperimentSummary(csv_path=csv_path, manifest_path=manifest_path,
                             n_rows=n_rows, n_cells=len(cells),
                             failures=failures, wall_ms=wall_ms)
