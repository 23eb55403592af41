"""Reduction performance metrics and the persistent report record."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .model import simulate

__all__ = [
    "nrmse",
    "impulse_error",
    "matched_leading_count",
    "ReductionReport",
    "REPORT_COLUMNS",
]

REPORT_SCHEMA = 1

REPORT_COLUMNS = [
    "method", "mode", "decomp", "horizon", "variant", "rx", "rp",
    "nrmse_red", "nrmse_val", "nrmse_extra", "Jx", "Jp", "Jxp",
    "cpu_s", "params", "diverged", "seed", "config_hash",
]


def nrmse(y_ref, y_hat):
    """Normalised root-mean-square error in percent.

    ``100 * ||y - y_hat|| / ||y - mean(y)||`` with the norms taken over all
    samples and output channels and the mean per channel.
    """
    y_ref = np.atleast_2d(np.asarray(y_ref, dtype=float))
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=float))
    if y_ref.ndim == 2 and y_ref.shape[0] == 1 and y_ref.size > 1:
        y_ref, y_hat = y_ref.T, y_hat.T
    if y_ref.shape != y_hat.shape:
        raise ValueError(f"sequences differ in shape: {y_ref.shape} vs {y_hat.shape}")
    if y_ref.shape[0] < 2:
        raise ValueError("need at least two samples")
    denom = np.linalg.norm(y_ref - y_ref.mean(axis=0))
    if denom <= 1e-300 * max(1.0, float(np.abs(y_ref).max())):
        raise ValueError("reference output is constant, NRMSE undefined")
    return float(np.linalg.norm(y_ref - y_hat) / denom * 100.0)


def impulse_error(fom, rom, length, fom_map, rom_map):
    """Per-sample output gap between two models driven by a unit impulse.

    Both models run closed loop (scheduling from their own maps) from zero
    state with ``u(0) = 1``; the result is the per-step 2-norm over output
    channels of the difference.  Divergence of either run truncates the
    comparison to the common prefix.
    """
    u = np.zeros((length, fom.n_u))
    u[0, :] = 1.0
    tf = simulate(fom, fom_map, u)
    tr = simulate(rom, rom_map, u[:, : rom.n_u])
    n = min(len(tf), len(tr))
    return np.linalg.norm(tf.y[:n] - tr.y[:n], axis=1)


def matched_leading_count(err, tol=1e-6):
    """Number of leading samples of an error sequence below ``tol``."""
    err = np.asarray(err, dtype=float).ravel()
    above = np.flatnonzero(err >= tol)
    return int(above[0]) if above.size else err.size


@dataclass
class ReductionReport:
    """One reduction run: dimensions, errors, costs, timing and provenance."""

    method: str = ""
    mode: str = ""
    decomp: str = ""
    horizon: int | None = None
    variant: str = ""
    rx: int | None = None
    rp: int | None = None
    nrmse_red: float | None = None
    nrmse_val: float | None = None
    nrmse_extra: float | None = None
    Jx: float | None = None
    Jp: float | None = None
    Jxp: float | None = None
    cpu_s: float | None = None
    params: int | None = None
    diverged: bool = False
    seed: int | None = None
    config_hash: str = ""
    schema: int = REPORT_SCHEMA
    notes: list = field(default_factory=list)
    error: str = ""

    def to_row(self):
        """CSV cells in ``REPORT_COLUMNS`` order."""
        cells = []
        for key in REPORT_COLUMNS:
            val = getattr(self, key)
            if val is None:
                cells.append("")
            elif isinstance(val, bool):
                cells.append(str(int(val)))
            elif isinstance(val, float):
                cells.append(f"{val:.6g}")
            else:
                cells.append(str(val))
        return cells

    def to_json_dict(self):
        out = asdict(self)
        out["schema"] = REPORT_SCHEMA
        return out

    @staticmethod
    def csv_header():
        return ",".join(REPORT_COLUMNS)

    @staticmethod
    def write_csv(reports, path):
        with open(path, "w") as fh:
            fh.write(ReductionReport.csv_header() + "\n")
            for rep in reports:
                fh.write(",".join(rep.to_row()) + "\n")

    @staticmethod
    def write_json(reports, path):
        with open(path, "w") as fh:
            json.dump([rep.to_json_dict() for rep in reports], fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
