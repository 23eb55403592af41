"""Experiment orchestration: run reducer grids over a benchmark and persist reports."""

from __future__ import annotations

import hashlib
import time
import traceback
from pathlib import Path

import numpy as np

from . import pod as pod_mod
from . import tmm as tmm_mod
from .benchmark import discretize_euler, embed_lpv, load_config
from .metrics import ReductionReport, nrmse
from .model import param_count, simulate
from .pod import cost_eval, snapshot_matrices
from .projection import petrov_galerkin

__all__ = ["run_reducer", "run_experiment", "config_hash", "merge_reports"]


def config_hash(text, seed=None):
    """Short reproducible digest of the configuration inputs."""
    payload = text.strip() + f"\nseed={seed}"
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _run_id(spec):
    bits = [spec["method"]]
    for key in sorted(spec):
        if key != "method":
            bits.append(f"{key}-{spec[key]}")
    return "_".join(bits)


def run_reducer(spec, model, eta, datasets, seed=0):
    """Run one reducer spec and evaluate it on the three datasets.

    Returns
    -------
    (ReductionReport, AffineLpvSs, ProjectionTriple)
    """
    method = spec["method"]
    if method == "tmm":
        reduced, reduced_map, spaces, report = tmm_mod.tmm_reduce(
            model,
            mode=spec.get("mode", "R"),
            decomp=spec.get("decomp", "hosvd"),
            n=int(spec.get("horizon", 2)),
            eta=eta,
            tol=float(spec.get("tol", tmm_mod.DEFAULT_RETENTION_TOL)),
            budget=float(spec.get("budget", tmm_mod.DEFAULT_BUDGET)),
        )
        triple = spaces.triple
    elif method == "pod":
        variant = spec.get("variant", "weighted").lower()
        r_x = int(spec.get("rx", 3))
        r_p = int(spec.get("rp", 2))
        residual = spec.get("residual", "galerkin")
        snap = snapshot_matrices(datasets.red)
        started = time.perf_counter()
        if variant == "matrix":
            triple = pod_mod.pod_matrix(snap, r_x, r_p, residual)
        elif variant == "weighted":
            triple = pod_mod.pod_weighted(snap, r_x, r_p, residual)
        elif variant in ("tsvd", "hosvd"):
            triple = pod_mod.pod_tensor(snap, r_x, r_p, variant, residual, seed=seed)
        else:
            raise ValueError(f"unknown pod variant '{variant}'")
        reduced, reduced_map = petrov_galerkin(model, triple, eta)
        report = ReductionReport(
            method="pod", variant=variant, rx=r_x, rp=r_p,
            cpu_s=time.perf_counter() - started, params=param_count(reduced),
        )
    else:
        raise ValueError(f"unknown reducer method '{spec['method']}'")

    report.seed = seed
    for name, traj in datasets.items():
        rom_traj = simulate(reduced, reduced_map, traj.u, t_step=traj.t_step,
                            label=f"rom-{name}")
        n = min(len(traj), len(rom_traj))
        if rom_traj.diverged_at is not None:
            report.diverged = True
            report.notes.append(f"{name}: diverged at step {rom_traj.diverged_at}")
        value = nrmse(traj.y[:n], rom_traj.y[:n]) if n >= 2 else float("inf")
        setattr(report, f"nrmse_{name}", value)
        if method == "pod" and name == "val" and not triple.z_includes_affine:
            costs = cost_eval(traj, triple, reduced=rom_traj)
            report.Jx, report.Jp, report.Jxp = costs.j_x, costs.j_p, costs.j_xp
    return report, reduced, triple


def run_experiment(config_path, out_dir, fmt="csv", seed=0):
    """Build the benchmark, generate datasets, run the reducer grid.

    Writes the three dataset trajectories, one projection triple per
    successful run and merged ``report.csv``/``report.json`` tables into
    ``out_dir``.  Failures of individual runs are recorded in their report
    row and do not stop the grid.

    Returns
    -------
    (list of ReductionReport, bool)
        The reports and whether any run failed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = load_config(config_path)
    digest = config_hash(cfg.raw_text, seed)

    datasets = cfg.build_datasets()
    for name, traj in datasets.items():
        traj.to_csv(out / f"dataset_{name}.csv")

    ct_model, eta = embed_lpv(cfg.chain)
    model = discretize_euler(ct_model, cfg.t_step)

    reports, any_failed = [], False
    for spec in cfg.reducers:
        run_id = _run_id(spec)
        try:
            report, _reduced, triple = run_reducer(spec, model, eta, datasets,
                                                   seed=seed)
            triple.save(out / f"triple_{run_id}.txt")
        except Exception as exc:  # noqa: BLE001 - per-run isolation is the contract
            any_failed = True
            report = ReductionReport(
                method=spec.get("method", "?"),
                mode=str(spec.get("mode", "")),
                decomp=str(spec.get("decomp", "")),
                variant=str(spec.get("variant", "")),
                horizon=int(spec["horizon"]) if "horizon" in spec else None,
                error=f"{type(exc).__name__}: {exc}",
                notes=[traceback.format_exc(limit=2).strip().splitlines()[-1]],
            )
        report.config_hash = digest
        report.seed = seed
        reports.append(report)

    if fmt in ("csv", "both"):
        ReductionReport.write_csv(reports, out / "report.csv")
    if fmt in ("json", "both"):
        ReductionReport.write_json(reports, out / "report.json")
    if fmt == "csv":
        ReductionReport.write_json(reports, out / "report.json")
    return reports, any_failed


def merge_reports(directory, out_csv=None, out_json=None):
    """Collect every ``report.json`` under a directory into one table."""
    import json

    rows = []
    for path in sorted(Path(directory).rglob("report.json")):
        with open(path) as fh:
            rows.extend(json.load(fh))
    reports = []
    for row in rows:
        rep = ReductionReport()
        for key, val in row.items():
            if hasattr(rep, key):
                setattr(rep, key, val)
        reports.append(rep)
    if out_csv:
        ReductionReport.write_csv(reports, out_csv)
    if out_json:
        ReductionReport.write_json(reports, out_json)
    return reports
