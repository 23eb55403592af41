"""Data-driven POD reduction of LPV-SS models, with joint-projection cost analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .decomp import _fix_column_signs, _mode_basis, matrix_svd, tsvd
from .projection import ProjectionTriple
from .tensor import Tensor

__all__ = [
    "SnapshotSet",
    "CostBreakdown",
    "snapshot_matrices",
    "pod_matrix",
    "weighted_matrices",
    "weighted_eigpairs",
    "pod_weighted",
    "joint_tensor",
    "pod_tensor",
    "cost_eval",
    "verify_bounds",
]

_RANK_TOL = 1e-10


@dataclass
class SnapshotSet:
    """State, scheduling and state-increment snapshots in column-per-sample form."""

    m_x: np.ndarray
    m_p: np.ndarray
    m_delta: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.m_x = np.atleast_2d(np.asarray(self.m_x, dtype=float))
        self.m_p = np.atleast_2d(np.asarray(self.m_p, dtype=float))
        self.m_delta = np.atleast_2d(np.asarray(self.m_delta, dtype=float))
        if self.m_x.shape[1] != self.m_p.shape[1]:
            raise ValueError("state and scheduling snapshot counts differ")

    @property
    def n_x(self):
        return self.m_x.shape[0]

    @property
    def n_p(self):
        return self.m_p.shape[0]

    @property
    def n_samples(self):
        return self.m_x.shape[1]


def snapshot_matrices(trajectories):
    """Snapshot matrices from one trajectory or several concatenated ones.

    State increments ``x(k+1) - x(k)`` are formed per trajectory, never
    across the seam between two of them.
    """
    if not isinstance(trajectories, (list, tuple)):
        trajectories = [trajectories]
    if not trajectories:
        raise ValueError("need at least one trajectory")
    xs, ps, deltas, labels = [], [], [], []
    for traj in trajectories:
        if len(traj) < 2:
            raise ValueError("trajectories must hold at least two samples")
        xs.append(traj.x.T)
        ps.append(traj.p.T)
        deltas.append(np.diff(traj.x, axis=0).T)
        labels.append(traj.label or "?")
    return SnapshotSet(
        m_x=np.hstack(xs), m_p=np.hstack(ps), m_delta=np.hstack(deltas),
        source="+".join(labels),
    )


def _leading_basis(mat, r, what):
    """First ``r`` left singular vectors, failing loudly on rank shortfall."""
    u, s, _ = matrix_svd(mat)
    rank = int(np.count_nonzero(s >= _RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if r > rank:
        raise ValueError(
            f"requested {r} {what} directions but the data only supports {rank}"
        )
    q, _ = _fix_column_signs(u[:, :r])
    return q, s


def _residual_basis(snap, v, r_x, residual):
    if residual == "galerkin":
        return v
    if residual == "delta":
        w, _ = _leading_basis(snap.m_delta, r_x, "state-increment")
        return w
    raise ValueError(f"unknown residual choice '{residual}' (use 'galerkin' or 'delta')")


def pod_matrix(snap, r_x, r_p, residual="galerkin"):
    """Independent POD: per-signal singular vectors of the snapshot matrices.

    State basis from ``M_x``, scheduling basis from ``M_p``; the test basis
    is either the state basis (Galerkin) or the leading singular vectors of
    the increment snapshots.
    """
    if not 1 <= r_x <= snap.n_x:
        raise ValueError(f"r_x must lie in [1, {snap.n_x}]")
    if not 1 <= r_p <= snap.n_p:
        raise ValueError(f"r_p must lie in [1, {snap.n_p}]")
    v, _ = _leading_basis(snap.m_x, r_x, "state")
    z, _ = _leading_basis(snap.m_p, r_p, "scheduling")
    w = _residual_basis(snap, v, r_x, residual)
    return ProjectionTriple(v=v, w=w, z=z, z_includes_affine=False,
                            tag=f"pod-matrix-{residual}")


def weighted_matrices(snap):
    """Cross-weighted second-moment matrices.

    ``Mx_w = sum_t ||p(t)||^2 x(t) x(t)^T`` and the symmetric counterpart
    with the roles of state and scheduling swapped.  Both are positive
    semidefinite.
    """
    wx = np.sum(snap.m_p ** 2, axis=0)
    wp = np.sum(snap.m_x ** 2, axis=0)
    mx = (snap.m_x * wx) @ snap.m_x.T
    mp = (snap.m_p * wp) @ snap.m_p.T
    return 0.5 * (mx + mx.T), 0.5 * (mp + mp.T)


def weighted_eigpairs(snap):
    """Descending eigenpairs of the two weighted matrices."""
    mx, mp = weighted_matrices(snap)
    out = []
    for m in (mx, mp):
        w, v = scipy.linalg.eigh(m)
        order = np.argsort(w)[::-1]
        v, _ = _fix_column_signs(v[:, order])
        out.append((np.clip(w[order], 0.0, None), v))
    return out[0], out[1]


def pod_weighted(snap, r_x, r_p, residual="galerkin"):
    """Joint POD through the weighted matrices.

    State and scheduling bases are the leading eigenvectors of the weighted
    second-moment matrices; discarding the trailing eigenvalues is exactly
    the minimal one-sided joint projection loss.
    """
    if not 1 <= r_x <= snap.n_x:
        raise ValueError(f"r_x must lie in [1, {snap.n_x}]")
    if not 1 <= r_p <= snap.n_p:
        raise ValueError(f"r_p must lie in [1, {snap.n_p}]")
    (wx, vx), (wp, vp) = weighted_eigpairs(snap)
    rank_x = int(np.count_nonzero(wx >= _RANK_TOL * wx[0])) if wx.size and wx[0] > 0 else 0
    rank_p = int(np.count_nonzero(wp >= _RANK_TOL * wp[0])) if wp.size and wp[0] > 0 else 0
    if r_x > rank_x:
        raise ValueError(f"requested {r_x} state directions but the data only supports {rank_x}")
    if r_p > rank_p:
        raise ValueError(f"requested {r_p} scheduling directions but the data only supports {rank_p}")
    v = vx[:, :r_x]
    z = vp[:, :r_p]
    w = _residual_basis(snap, v, r_x, residual)
    return ProjectionTriple(v=v, w=w, z=z, z_includes_affine=False,
                            tag=f"pod-weighted-{residual}")


def joint_tensor(snap):
    """Order-3 data tensor stacking the per-sample outer products ``x(t) p(t)^T``."""
    return Tensor(np.einsum("it,jt->ijt", snap.m_x, snap.m_p), copy=False)


def pod_tensor(snap, r_x, r_p, decomp="hosvd", residual="galerkin", seed=0):
    """Joint POD from a tensor decomposition of the stacked outer products.

    The state basis comes from mode-0 vectors and the scheduling basis from
    mode-1 vectors of the data tensor, under HOSVD or TSVD.
    """
    if not 1 <= r_x <= snap.n_x:
        raise ValueError(f"r_x must lie in [1, {snap.n_x}]")
    if not 1 <= r_p <= snap.n_p:
        raise ValueError(f"r_p must lie in [1, {snap.n_p}]")
    t = joint_tensor(snap)
    decomp = decomp.lower()
    if decomp == "hosvd":
        # Only the state and scheduling factors of the HOSVD are needed, so
        # the (typically very wide) sample-mode factor is never formed.
        v, sx = _mode_basis(t.array, 0)
        z, sp = _mode_basis(t.array, 1)
        rank_x = int(np.count_nonzero(sx >= _RANK_TOL * sx[0])) if sx.size and sx[0] > 0 else 0
        rank_p = int(np.count_nonzero(sp >= _RANK_TOL * sp[0])) if sp.size and sp[0] > 0 else 0
        if r_x > rank_x or r_p > rank_p:
            raise ValueError("data tensor ranks fall short of the requested sizes")
        v, _ = _fix_column_signs(v[:, :r_x])
        z, _ = _fix_column_signs(z[:, :r_p])
    elif decomp == "tsvd":
        want = max(r_x, r_p)
        res = tsvd(t, want, seed=seed)
        if res.n_components < want:
            raise ValueError(
                f"tensor SVD produced {res.n_components} components, "
                f"need {want}; the data tensor rank is too low"
            )
        v, _ = _fix_column_signs(res.vectors[0][:, :r_x])
        z, _ = _fix_column_signs(res.vectors[1][:, :r_p])
    else:
        raise ValueError(f"unknown decomposition '{decomp}' (use 'hosvd' or 'tsvd')")
    w = _residual_basis(snap, v, r_x, residual)
    return ProjectionTriple(v=v, w=w, z=z, z_includes_affine=False,
                            tag=f"pod-{decomp}-{residual}")


@dataclass
class CostBreakdown:
    """Projection error functionals of one dataset under one basis pair.

    ``j_xp`` is the summed squared Frobenius gap between the outer products
    of the true and approximated signals.  The three parts isolate the
    state-only loss, the scheduling-only loss and their overlap; for
    projection-type approximations they satisfy
    ``j_xp = j_xp_a + j_xp_b - j_xp_c`` exactly.
    """

    j_x: float
    j_p: float
    j_xp: float
    j_xp_a: float
    j_xp_b: float
    j_xp_c: float
    context: str = "projection"


def _breakdown(x, p, x_hat, p_hat, context):
    ex = x - x_hat
    ep = p - p_hat
    j_x = float(np.sum(ex ** 2))
    j_p = float(np.sum(ep ** 2))
    outer_true = np.einsum("ti,tj->tij", x, p)
    outer_hat = np.einsum("ti,tj->tij", x_hat, p_hat)
    j_xp = float(np.sum((outer_true - outer_hat) ** 2))
    ex2 = np.sum(ex ** 2, axis=1)
    ep2 = np.sum(ep ** 2, axis=1)
    j_a = float(np.dot(ex2, np.sum(p ** 2, axis=1)))
    j_b = float(np.dot(np.sum(x ** 2, axis=1), ep2))
    j_c = float(np.dot(ex2, ep2))
    return CostBreakdown(j_x=j_x, j_p=j_p, j_xp=j_xp,
                         j_xp_a=j_a, j_xp_b=j_b, j_xp_c=j_c, context=context)


def cost_eval(data, triple, reduced=None):
    """Evaluate the cost functionals for a basis pair.

    Parameters
    ----------
    data : SnapshotSet or Trajectory
        With a :class:`SnapshotSet`, the approximations are the orthogonal
        projections ``V V^T x`` and ``Z Z^T p`` (projection-only context).
        With a reference :class:`Trajectory`, ``reduced`` must carry the
        reduced-model simulation and the approximations are the lifted
        reduced signals ``V x_r`` and ``Z p_r`` (closed-loop context).
    triple : ProjectionTriple
        Must act on the plain scheduling vector.

    Returns
    -------
    CostBreakdown
    """
    if triple.z_includes_affine:
        raise ValueError("cost functionals are defined on the plain scheduling "
                         "vector; the basis must not cover the constant channel")
    v, z = triple.v, triple.z
    if reduced is None:
        x = data.m_x.T
        p = data.m_p.T
        return _breakdown(x, p, x @ (v @ v.T).T, p @ (z @ z.T).T, "projection")
    n = min(len(data), len(reduced))
    x = data.x[:n]
    p = data.p[:n]
    if reduced.x.shape[1] != v.shape[1]:
        raise ValueError("reduced trajectory width does not match the state basis")
    x_hat = reduced.x[:n] @ v.T
    p_hat = reduced.p[:n] @ z.T
    return _breakdown(x, p, x_hat, p_hat, "closed-loop")


def verify_bounds(costs, eigen_tails=None, rtol=1e-8):
    """Check the joint-cost inequalities on one evaluated breakdown.

    Violations are findings, not errors: each entry reports the boolean and
    the signed margin (nonnegative means the bound holds).

    Parameters
    ----------
    costs : CostBreakdown
    eigen_tails : (float, float) or None
        Discarded-eigenvalue sums of the two weighted matrices; when given,
        the greedy-optimal sandwich ``max(tails) <= j_xp <= sum(tails)`` is
        checked as well.
    """
    scale = max(1.0, abs(costs.j_xp), abs(costs.j_xp_a), abs(costs.j_xp_b))
    slack = rtol * scale
    report = {}
    margin = costs.j_xp_a + costs.j_xp_b - costs.j_xp
    report["upper_bound"] = {"holds": bool(margin >= -slack), "margin": margin}
    lo = costs.j_xp_c
    hi = min(costs.j_xp_a, costs.j_xp_b) - costs.j_xp_c
    report["coupling_bounds"] = {
        "holds": bool(lo >= -slack and hi >= -slack),
        "margin": min(lo, hi),
    }
    if eigen_tails is not None:
        tail_x, tail_p = float(eigen_tails[0]), float(eigen_tails[1])
        lo_m = costs.j_xp - max(tail_x, tail_p)
        hi_m = (tail_x + tail_p) - costs.j_xp
        report["greedy_sandwich"] = {
            "holds": bool(lo_m >= -slack and hi_m >= -slack),
            "margin": min(lo_m, hi_m),
        }
    report["all_hold"] = all(v["holds"] for k, v in report.items() if k != "all_hold")
    return report
