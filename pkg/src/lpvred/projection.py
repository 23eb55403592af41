"""Extended Petrov-Galerkin projection: state, residual and scheduling bases."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import AffineLpvSs, SchedulingMap

__all__ = [
    "ProjectionTriple",
    "petrov_galerkin",
    "project_signal",
    "reduce_scheduling_sequence",
]

COND_WARN = 1e8
COND_ERROR = 1e12
_PINV_RCOND = 1e-12


@dataclass
class ProjectionTriple:
    """State basis ``v``, residual (test) basis ``w`` and scheduling basis ``z``.

    ``z`` acts on the plain scheduling vector, or on the affine-extended one
    when ``z_includes_affine`` is set (one extra leading row for the constant
    channel).  ``tag`` records the provenance (tmm-R, pod-weighted, ...).
    """

    v: np.ndarray
    w: np.ndarray
    z: np.ndarray
    z_includes_affine: bool = False
    tag: str = ""

    def __post_init__(self):
        self.v = np.atleast_2d(np.asarray(self.v, dtype=float))
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        self.z = np.atleast_2d(np.asarray(self.z, dtype=float))
        if self.v.shape != self.w.shape:
            raise ValueError(f"V and W must share shape, got {self.v.shape}, {self.w.shape}")
        for name, m in (("V", self.v), ("W", self.w), ("Z", self.z)):
            if m.shape[1] and np.linalg.matrix_rank(m) < m.shape[1]:
                raise ValueError(f"{name} is rank deficient")

    @property
    def r_x(self):
        return self.v.shape[1]

    @property
    def r_p(self):
        """Columns of the scheduling basis (the constant channel, when folded
        in, counts as one of them)."""
        return self.z.shape[1]

    def wv_condition(self):
        """Condition number of ``W.T @ V``."""
        s = scipy.linalg.svd(self.w.T @ self.v, compute_uv=False)
        if s.size == 0 or s[-1] == 0.0:
            return np.inf
        return float(s[0] / s[-1])

    def save(self, path):
        """Plain-text dump: flags plus a dims header and rows per matrix."""
        with open(path, "w") as fh:
            fh.write("projection-triple 1\n")
            fh.write(f"tag {self.tag or '-'}\n")
            fh.write(f"z_includes_affine {int(self.z_includes_affine)}\n")
            for name, m in (("V", self.v), ("W", self.w), ("Z", self.z)):
                fh.write(f"{name} {m.shape[0]} {m.shape[1]}\n")
                for row in m:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            magic = fh.readline().split()
            if magic[:1] != ["projection-triple"]:
                raise ValueError(f"{path} is not a projection-triple file")
            tag = fh.readline().split(maxsplit=1)[1].strip()
            flag = bool(int(fh.readline().split()[1]))
            mats = {}
            for _ in range(3):
                name, rows, cols = fh.readline().split()
                rows, cols = int(rows), int(cols)
                data = [
                    np.fromstring(fh.readline(), sep=" ") for _ in range(rows)
                ]
                mats[name] = np.array(data).reshape(rows, cols)
        return cls(v=mats["V"], w=mats["W"], z=mats["Z"],
                   z_includes_affine=flag, tag="" if tag == "-" else tag)


def _mode3(stack, zt):
    """Contract the channel mode of an order-3 stack with ``zt`` rows."""
    return np.tensordot(stack, zt, axes=([2], [1]))


def petrov_galerkin(model, triple, eta=None):
    """Project an affine LPV-SS model onto the triple's subspaces.

    The reduced coefficient tensors are the originals contracted with
    ``(W.T V)^{-1} W.T`` on the state-output mode, ``V.T`` on the state-input
    mode and the affine-extended scheduling basis transposed on the channel
    mode.  When the scheduling basis already covers the constant channel the
    reduced model has no separate affine term and the reduced map stacks a 1
    on top of the original map before applying the pseudo-inverse; otherwise
    the basis is block-extended with a leading 1 and the constant channel is
    kept.

    Parameters
    ----------
    model : AffineLpvSs
        Must carry a constant channel (``affine_flag`` set).
    triple : ProjectionTriple
    eta : SchedulingMap or None
        Full-order scheduling map; when given, the reduced map is returned.

    Returns
    -------
    (AffineLpvSs, SchedulingMap or None)
    """
    if not model.affine_flag:
        raise ValueError("petrov_galerkin expects a model with a constant channel")
    if triple.v.shape[0] != model.n_x:
        raise ValueError(f"V has {triple.v.shape[0]} rows, model has n_x {model.n_x}")
    z_rows = model.n_p + 1 if triple.z_includes_affine else model.n_p
    if triple.z.shape[0] != z_rows:
        raise ValueError(f"Z has {triple.z.shape[0]} rows, expected {z_rows}")

    cond = triple.wv_condition()
    if cond > COND_ERROR:
        raise np.linalg.LinAlgError(f"W.T V is numerically singular (cond {cond:.2e})")
    if cond > COND_WARN:
        warnings.warn(f"W.T V is ill conditioned (cond {cond:.2e})", RuntimeWarning)

    e = scipy.linalg.solve(triple.w.T @ triple.v, triple.w.T)
    vt = triple.v.T
    if triple.z_includes_affine:
        zbar = triple.z
    else:
        zbar = scipy.linalg.block_diag(np.ones((1, 1)), triple.z)

    a_r = _mode3(np.tensordot(np.tensordot(e, model.a, axes=([1], [0])), vt,
                              axes=([1], [1])).transpose(0, 2, 1), zbar.T)
    b_r = _mode3(np.tensordot(e, model.b, axes=([1], [0])), zbar.T)
    c_r = _mode3(np.tensordot(model.c, vt, axes=([1], [1])).transpose(0, 2, 1), zbar.T)
    d_r = _mode3(model.d, zbar.T)

    reduced = AffineLpvSs(a=a_r, b=b_r, c=c_r, d=d_r,
                          affine_flag=not triple.z_includes_affine)

    reduced_map = None
    if eta is not None:
        z_pinv = np.linalg.pinv(triple.z, rcond=_PINV_RCOND)
        reduced_map = SchedulingMap.compose_reduced(
            eta, triple.v, z_pinv, triple.z_includes_affine
        )
    return reduced, reduced_map


def reduce_scheduling_sequence(triple, p_seq):
    """Replay a full scheduling sequence through the triple's basis.

    Maps each ``p(t)`` to ``Z^+ p(t)``, stacking the constant channel first
    when the basis covers it.  This is the explicit-sequence counterpart of
    the reduced scheduling map.
    """
    p_seq = np.atleast_2d(np.asarray(p_seq, dtype=float))
    z_pinv = np.linalg.pinv(triple.z, rcond=_PINV_RCOND)
    if triple.z_includes_affine:
        ones = np.ones((p_seq.shape[0], 1))
        p_seq = np.hstack([ones, p_seq])
    return p_seq @ z_pinv.T


def project_signal(basis, s):
    """Least-squares coordinates of ``s`` in the span of ``basis``.

    Returns ``(coords, reconstruction, residual_norm)`` with the residual
    orthogonal to the basis columns.
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    s = np.asarray(s, dtype=float).ravel()
    if basis.shape[0] != s.size:
        raise ValueError(f"basis has {basis.shape[0]} rows, signal length {s.size}")
    if basis.shape[1] and np.linalg.matrix_rank(basis) < basis.shape[1]:
        raise ValueError("basis is rank deficient")
    coords = np.linalg.pinv(basis, rcond=_PINV_RCOND) @ s
    reconstruction = basis @ coords
    return coords, reconstruction, float(np.linalg.norm(s - reconstruction))
