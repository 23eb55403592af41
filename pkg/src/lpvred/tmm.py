"""Tensor-based LPV moment matching: reachability/observability tensors and reducers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .decomp import _mode_basis, orth_union, tsvd
from .metrics import ReductionReport
from .model import param_count
from .projection import ProjectionTriple, petrov_galerkin
from .tensor import Tensor, contract

__all__ = [
    "MemoryBudgetError",
    "RankConditionError",
    "SubspaceSet",
    "reachability_tensor",
    "observability_tensor",
    "reach_spaces",
    "obsv_spaces",
    "tmm_reduce",
]

DEFAULT_RETENTION_TOL = 1e-8
DEFAULT_BUDGET = int(2e8)


class MemoryBudgetError(RuntimeError):
    """Requested horizon would exceed the configured tensor entry budget."""


class RankConditionError(RuntimeError):
    """Hankel-mode rank condition between the subspace matrices failed."""


def _check_budget(scalars, budget, what):
    if scalars > budget:
        raise MemoryBudgetError(
            f"{what} needs {scalars:.3g} scalars, over the budget of {budget:.3g}; "
            "lower the horizon or raise the budget"
        )


def _b_tilde(model):
    """Input tensor with scheduling and input modes swapped: dims (n_x, m, n_u)."""
    return np.ascontiguousarray(np.transpose(model.b, (0, 2, 1)))


def _c_tilde(model):
    """Output tensor with state and scheduling modes swapped: dims (n_y, m, n_x)."""
    return np.ascontiguousarray(np.transpose(model.c, (0, 2, 1)))


def _reach_step(model, prev):
    """One recursion step: contract the state-update tensor into the previous
    reachability tensor; the fresh scheduling mode lands at position 1."""
    return contract(Tensor(model.a, copy=False), prev, 1, 0)


def _obsv_step(model, prev):
    """One recursion step for observability; the fresh scheduling mode must sit
    just before the trailing state mode, so the last two modes are swapped."""
    arr = contract(prev, Tensor(model.a, copy=False), prev.order - 1, 0).array
    return Tensor(np.swapaxes(arr, -1, -2), copy=False)


def reachability_tensor(model, k, budget=DEFAULT_BUDGET):
    """Reachability tensor of horizon ``k``.

    Dimensions are ``(n_x, m, ..., m, n_u)`` with ``k + 1`` scheduling modes
    of size ``m = n_p + 1``; its mode-0 span collects the states reachable in
    ``k + 1`` steps and the scheduling modes the directions driving them.
    """
    if k < 0:
        raise ValueError("horizon must be nonnegative")
    m = model.n_channels
    _check_budget(model.n_x * model.n_u * m ** (k + 1), budget,
                  f"reachability tensor at horizon {k}")
    t = Tensor(_b_tilde(model), copy=False)
    for _ in range(k):
        t = _reach_step(model, t)
    return t


def observability_tensor(model, k, budget=DEFAULT_BUDGET):
    """Observability tensor of horizon ``k``, dims ``(n_y, m, ..., m, n_x)``."""
    if k < 0:
        raise ValueError("horizon must be nonnegative")
    m = model.n_channels
    _check_budget(model.n_y * model.n_x * m ** (k + 1), budget,
                  f"observability tensor at horizon {k}")
    t = Tensor(_c_tilde(model), copy=False)
    for _ in range(k):
        t = _obsv_step(model, t)
    return t


def _kept_mode_vectors(t, modes, decomp, tol, seed=0):
    """Per-mode singular vectors retained at relative tolerance ``tol``.

    HOSVD keeps, per requested mode, the left singular vectors of the
    unfolding whose singular value clears ``tol`` relative to the largest.
    TSVD extracts successive rank-1 components of the whole tensor and keeps
    the per-mode vectors of every component whose value clears the same
    threshold; the component count is capped by the smallest mode size.
    """
    arr = t.array
    if decomp == "hosvd":
        out, sigmas = {}, {}
        for mode in modes:
            q, s = _mode_basis(arr, mode)
            sigmas[mode] = s
            if s.size == 0 or s[0] == 0.0:
                out[mode] = np.zeros((arr.shape[mode], 0))
                continue
            keep = int(np.count_nonzero(s >= tol * s[0]))
            out[mode] = q[:, :keep]
        return out, sigmas
    if decomp == "tsvd":
        res = tsvd(t, min(arr.shape), seed=seed)
        if res.n_components == 0:
            return ({mode: np.zeros((arr.shape[mode], 0)) for mode in modes},
                    {mode: np.zeros(0) for mode in modes})
        keep = int(np.count_nonzero(res.sigmas >= tol * res.sigmas[0]))
        return ({mode: res.vectors[mode][:, :keep] for mode in modes},
                {mode: res.sigmas.copy() for mode in modes})
    raise ValueError(f"unknown decomposition '{decomp}' (use 'hosvd' or 'tsvd')")


def reach_spaces(model, n, decomp="hosvd", tol=DEFAULT_RETENTION_TOL,
                 budget=DEFAULT_BUDGET, sigma_log=None):
    """State- and scheduling-reachability bases up to horizon ``n``.

    Builds the reachability tensor of every horizon ``k <= n``, decomposes
    it, and accumulates mode-0 vectors into the state basis and the vectors
    of all scheduling modes (1 through k+1) into the scheduling basis.

    Returns
    -------
    (R, P)
        Column-orthonormal matrices of shape ``(n_x, r)`` and ``(m, r_p)``
        where ``m`` counts the constant channel.
    """
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    r_blocks, p_blocks = [], []
    t = None
    for k in range(n + 1):
        m = model.n_channels
        _check_budget(model.n_x * model.n_u * m ** (k + 1), budget,
                      f"reachability tensor at horizon {k}")
        t = Tensor(_b_tilde(model), copy=False) if k == 0 else _reach_step(model, t)
        sched_modes = list(range(1, k + 2))
        kept, sigmas = _kept_mode_vectors(t, [0] + sched_modes, decomp, tol, seed=k)
        r_blocks.append(kept[0])
        p_blocks.extend(kept[mode] for mode in sched_modes)
        if sigma_log is not None:
            sigma_log.append({"horizon": k, "sigmas": sigmas})
    return orth_union(r_blocks), orth_union(p_blocks)


def obsv_spaces(model, n, decomp="hosvd", tol=DEFAULT_RETENTION_TOL,
                budget=DEFAULT_BUDGET, sigma_log=None):
    """State- and scheduling-observability bases up to horizon ``n``.

    Symmetric to :func:`reach_spaces`: state vectors come from the trailing
    mode of each observability tensor, scheduling vectors from the middle
    modes.
    """
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    o_blocks, q_blocks = [], []
    t = None
    for k in range(n + 1):
        m = model.n_channels
        _check_budget(model.n_y * model.n_x * m ** (k + 1), budget,
                      f"observability tensor at horizon {k}")
        t = Tensor(_c_tilde(model), copy=False) if k == 0 else _obsv_step(model, t)
        state_mode = t.order - 1
        sched_modes = list(range(1, k + 2))
        kept, sigmas = _kept_mode_vectors(t, sched_modes + [state_mode], decomp, tol,
                                          seed=k)
        o_blocks.append(kept[state_mode])
        q_blocks.extend(kept[mode] for mode in sched_modes)
        if sigma_log is not None:
            sigma_log.append({"horizon": k, "sigmas": sigmas})
    return orth_union(o_blocks), orth_union(q_blocks)


@dataclass
class SubspaceSet:
    """The four subspace matrices of one moment-matching run, plus the
    projection triple assembled from them."""

    horizon: int
    decomp: str
    r: np.ndarray | None = None
    p: np.ndarray | None = None
    o: np.ndarray | None = None
    q: np.ndarray | None = None
    triple: object | None = None
    sigma_log: list = field(default_factory=list)


def _hankel_triple(r_n, p_n, o_n, q_n, tol):
    """Factorise ``O_n.T R_n`` and build the Hankel-mode projection bases."""
    if r_n.shape[1] != o_n.shape[1]:
        raise RankConditionError(
            f"rank(R_n) = {r_n.shape[1]} differs from rank(O_n) = {o_n.shape[1]}"
        )
    h = o_n.T @ r_n
    u, s, vh = scipy.linalg.svd(h)
    if s.size == 0 or s[0] == 0.0 or s[-1] < tol * s[0]:
        raise RankConditionError(
            "rank(O_n.T R_n) falls short of the subspace ranks "
            f"(singular values {s})"
        )
    scale = 1.0 / np.sqrt(s)
    v = r_n @ (vh.T * scale)
    w = o_n @ (u * scale)
    z = orth_union([p_n, q_n])
    return v, w, z


def _constant_direction_in_span(z, tol=1e-8):
    """Whether the pure constant channel lies in the span of ``z``."""
    e0 = np.zeros(z.shape[0])
    e0[0] = 1.0
    return np.linalg.norm(e0 - z @ (z.T @ e0)) < tol


def reported_scheduling_dim(triple):
    """Scheduling dimension as reported: a pure-constant direction inside an
    affine-covering basis does not count as a varying scheduling signal."""
    if triple.z_includes_affine and _constant_direction_in_span(triple.z):
        return triple.z.shape[1] - 1
    return triple.z.shape[1]


def tmm_reduce(model, mode, decomp, n, eta=None, tol=DEFAULT_RETENTION_TOL,
               budget=DEFAULT_BUDGET):
    """Moment-matching reduction of an affine LPV-SS model.

    Parameters
    ----------
    model : AffineLpvSs
        Full model with a constant channel.
    mode : {"R", "O", "H"}
        Reachability, observability or Hankel mode.  Hankel mode requires
        matching subspace ranks and factorises ``O_n.T R_n`` with a
        square-root SVD split so that ``W.T V = I``.
    decomp : {"hosvd", "tsvd"}
    n : int
        Horizon.
    eta : SchedulingMap or None

    Returns
    -------
    (AffineLpvSs, SchedulingMap or None, SubspaceSet, ReductionReport)
    """
    mode = mode.upper()
    decomp = decomp.lower()
    if mode not in ("R", "O", "H"):
        raise ValueError(f"unknown reduction mode '{mode}'")
    spaces = SubspaceSet(horizon=n, decomp=decomp)
    started = time.perf_counter()
    if mode in ("R", "H"):
        spaces.r, spaces.p = reach_spaces(model, n, decomp, tol, budget,
                                          sigma_log=spaces.sigma_log)
    if mode in ("O", "H"):
        spaces.o, spaces.q = obsv_spaces(model, n, decomp, tol, budget,
                                         sigma_log=spaces.sigma_log)

    if mode == "R":
        v, w, z = spaces.r, spaces.r, spaces.p
    elif mode == "O":
        v, w, z = spaces.o, spaces.o, spaces.q
    else:
        v, w, z = _hankel_triple(spaces.r, spaces.p, spaces.o, spaces.q, tol)
    if v.shape[1] == 0 or z.shape[1] == 0:
        raise ValueError("moment matching produced an empty basis; "
                         "the model may have zero input or output tensors")

    triple = ProjectionTriple(v=v, w=w, z=z, z_includes_affine=True,
                              tag=f"tmm-{mode}-{decomp}")
    spaces.triple = triple
    reduced, reduced_map = petrov_galerkin(model, triple, eta)
    elapsed = time.perf_counter() - started

    report = ReductionReport(
        method="tmm", mode=mode, decomp=decomp, horizon=n,
        rx=triple.r_x, rp=reported_scheduling_dim(triple),
        cpu_s=elapsed, params=param_count(reduced),
        notes=[f"z columns {triple.r_p} (constant direction excluded from rp "
               f"count when spanned)"],
    )
    return reduced, reduced_map, spaces, report
