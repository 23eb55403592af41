"""Matrix SVD plus the two tensor decompositions (HOSVD, TSVD) and subspace unions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .tensor import Tensor, frobenius, mode_product, outer_product, unfold

__all__ = [
    "HosvdResult",
    "TsvdResult",
    "matrix_svd",
    "hosvd",
    "hosvd_truncate",
    "tsvd",
    "orth_union",
]

# Above this entry count, per-mode bases come from Gram eigendecompositions
# instead of a full SVD of the unfolding (same subspaces, far less memory).
_GRAM_THRESHOLD = 2_000_000

# Pre-compress tensors larger than this before running the TSVD iteration.
_TSVD_COMPRESS_THRESHOLD = 200_000


def _fix_column_signs(q):
    """Flip columns of ``q`` so the first significantly nonzero entry is positive.

    Returns the sign vector applied (one entry per column).
    """
    q = np.asarray(q)
    signs = np.ones(q.shape[1])
    for j in range(q.shape[1]):
        col = q[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * max(1.0, np.abs(col).max()))
        if big.size and col[big[0]] < 0:
            signs[j] = -1.0
    return q * signs, signs


def matrix_svd(a):
    """Economy SVD ``a = U @ diag(s) @ V.T``.

    Returns
    -------
    (U, s, V)
        ``U`` and ``V`` column-orthonormal, ``s`` nonincreasing and >= 0.
        ``V`` holds right singular vectors as columns.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix_svd input must be finite")
    u, s, vh = scipy.linalg.svd(a, full_matrices=False)
    return u, s, vh.T


def _mode_basis(arr, mode, gram_threshold=_GRAM_THRESHOLD):
    """Left singular vectors and singular values of the mode unfolding.

    Uses the symmetric Gram matrix when the tensor is large and the mode is
    the small side; singular values below ~1e-8 relative are then at the
    noise floor of the squared problem.
    """
    ln = arr.shape[mode]
    rest = arr.size // ln
    if arr.size > gram_threshold and ln <= rest:
        axes = [m for m in range(arr.ndim) if m != mode]
        g = np.tensordot(arr, arr, axes=(axes, axes))
        w, v = scipy.linalg.eigh(g)
        order = np.argsort(w)[::-1]
        w = np.clip(w[order], 0.0, None)
        return v[:, order], np.sqrt(w)
    u, s, _ = scipy.linalg.svd(
        np.moveaxis(arr, mode, 0).reshape(ln, -1, order="F"), full_matrices=False
    )
    return u, s


@dataclass
class HosvdResult:
    """Core tensor, per-mode orthonormal factors and per-mode singular values."""

    core: Tensor
    factors: list = field(default_factory=list)
    mode_sigmas: list = field(default_factory=list)

    def reconstruct(self):
        """Multiply the core back out through every factor."""
        out = self.core
        for n, q in enumerate(self.factors):
            out = mode_product(out, q, n)
        return out


def hosvd(t):
    """Higher-order SVD: per-mode left singular vectors of the unfoldings.

    The core is ``t`` contracted with every factor transposed; at full
    per-mode rank the reconstruction is exact.
    """
    arr = t.array if isinstance(t, Tensor) else np.asarray(t, dtype=float)
    factors, sigmas = [], []
    for mode in range(arr.ndim):
        q, s = _mode_basis(arr, mode)
        q, _ = _fix_column_signs(q)
        factors.append(q)
        sigmas.append(s)
    core = arr
    for mode, q in enumerate(factors):
        core = np.moveaxis(np.tensordot(q.T, core, axes=([1], [mode])), 0, mode)
    return HosvdResult(core=Tensor(core, copy=False), factors=factors, mode_sigmas=sigmas)


def hosvd_truncate(t, ranks):
    """Reduced HOSVD keeping ``ranks[n]`` leading columns per mode.

    Returns the rank-``ranks`` approximation together with the truncated
    decomposition.
    """
    t = t if isinstance(t, Tensor) else Tensor(t)
    ranks = [int(r) for r in ranks]
    if len(ranks) != t.order:
        raise ValueError(f"need {t.order} ranks, got {len(ranks)}")
    full = hosvd(t)
    for n, r in enumerate(ranks):
        if not 1 <= r <= t.dims[n]:
            raise ValueError(f"rank {r} out of range for mode {n} of size {t.dims[n]}")
        if r > full.factors[n].shape[1]:
            raise ValueError(
                f"mode {n} has only {full.factors[n].shape[1]} singular vectors"
            )
    factors = [q[:, :r] for q, r in zip(full.factors, ranks)]
    core = full.core.array[tuple(slice(r) for r in ranks)]
    truncated = HosvdResult(
        core=Tensor(core),
        factors=factors,
        mode_sigmas=[s[:r] for s, r in zip(full.mode_sigmas, ranks)],
    )
    return truncated.reconstruct(), truncated


@dataclass
class TsvdResult:
    """Sequentially extracted tensor singular values and per-mode vectors.

    ``vectors[n]`` stacks the mode-n vectors of all components as columns;
    within a mode the columns are orthonormal.  ``residual_norms[i]`` is the
    Frobenius norm of the input minus the leading ``i+1`` rank-1 terms.
    """

    sigmas: np.ndarray
    vectors: list
    residual_norms: np.ndarray
    converged: list

    @property
    def n_components(self):
        return len(self.sigmas)

    def reconstruct(self, r=None):
        """Sum of the leading ``r`` rank-1 components."""
        r = self.n_components if r is None else r
        terms = [
            self.sigmas[i] * outer_product([v[:, i] for v in self.vectors]).array
            for i in range(r)
        ]
        return Tensor(np.sum(terms, axis=0))


def _contract_all_but(arr, phis, skip):
    """Contract every mode of ``arr`` with its vector except ``skip``.

    Contracting from the highest axis downwards keeps lower axis indices
    stable, so no index bookkeeping is needed.
    """
    out = arr
    for m in range(arr.ndim - 1, -1, -1):
        if m == skip:
            continue
        out = np.tensordot(out, phis[m], axes=([m], [0]))
    return out


def _random_unit(rng, dim, complement):
    """Random unit vector orthogonal to the columns of ``complement``."""
    for _ in range(50):
        v = rng.standard_normal(dim)
        if complement.shape[1]:
            v -= complement @ (complement.T @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            return v / nrm
    raise RuntimeError("could not draw a vector in the orthogonal complement")


def _hosvd_start(deflated, found, rng):
    """Leading mode vectors of the deflated tensor, projected into the
    admissible set; lands the iteration in the dominant basin."""
    phis = []
    for n in range(deflated.ndim):
        q, s = _mode_basis(deflated, n)
        v = q[:, 0] if s.size and s[0] > 0 else rng.standard_normal(deflated.shape[n])
        if found[n].shape[1]:
            v = v - found[n] @ (found[n].T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-10:
            return None
        phis.append(v / nrm)
    return phis


def _tsvd_iterate(arr, r, tol, max_iters, restarts, rng):
    dims = arr.shape
    n_modes = arr.ndim
    found = [np.zeros((d, 0)) for d in dims]
    sigmas, converged, comp_vectors = [], [], []
    deflated = arr.copy()

    for _comp in range(r):
        best_val, best_phis, best_conv = -1.0, None, False
        starts = [_hosvd_start(deflated, found, rng)]
        starts += [None] * restarts
        for start in starts:
            phis = start if start is not None else \
                [_random_unit(rng, dims[n], found[n]) for n in range(n_modes)]
            val_prev, val, conv = -1.0, 0.0, False
            for _ in range(max_iters):
                dead = False
                for n in range(n_modes):
                    w = _contract_all_but(arr, phis, n)
                    if found[n].shape[1]:
                        w = w - found[n] @ (found[n].T @ w)
                    nrm = np.linalg.norm(w)
                    if nrm < 1e-300:
                        dead = True
                        break
                    phis[n] = w / nrm
                    val = nrm
                if dead:
                    val = 0.0
                    break
                if abs(val - val_prev) <= tol * max(1.0, abs(val)):
                    conv = True
                    break
                val_prev = val
            if val > best_val:
                best_val, best_phis, best_conv = val, [p.copy() for p in phis], conv
        if best_phis is None or best_val <= 1e-14 * max(1.0, float(np.abs(arr).max())):
            break  # residual exhausted in the admissible set
        # Pin component signs: modes 1..N-1 get a positive leading entry,
        # compensating flips land in mode 0 so sigma stays the raw value.
        flips = 1.0
        for n in range(1, n_modes):
            fixed, signs = _fix_column_signs(best_phis[n][:, None])
            best_phis[n] = fixed[:, 0]
            flips *= signs[0]
        best_phis[0] = best_phis[0] * flips
        for n in range(n_modes):
            found[n] = np.hstack([found[n], best_phis[n][:, None]])
        sigmas.append(best_val)
        converged.append(bool(best_conv))
        comp_vectors.append(best_phis)
        deflated -= best_val * outer_product(best_phis).array

    # A restart can converge to a non-leading component first; reorder by
    # value (the family is mutually orthonormal either way) and rebuild the
    # deflation residuals in that order.
    order = sorted(range(len(sigmas)), key=lambda i: -sigmas[i])
    sigmas = [sigmas[i] for i in order]
    converged = [converged[i] for i in order]
    comp_vectors = [comp_vectors[i] for i in order]
    residuals = []
    deflated = arr.copy()
    for val, phis in zip(sigmas, comp_vectors):
        deflated -= val * outer_product(phis).array
        residuals.append(float(np.linalg.norm(deflated.ravel())))

    vectors = [
        np.column_stack([comp[n] for comp in comp_vectors])
        if comp_vectors
        else np.zeros((dims[n], 0))
        for n in range(n_modes)
    ]
    return TsvdResult(
        sigmas=np.asarray(sigmas),
        vectors=vectors,
        residual_norms=np.asarray(residuals),
        converged=converged,
    )


def tsvd(t, r, tol=1e-10, max_iters=1000, restarts=5, seed=0):
    """Tensor singular value decomposition by alternating power iteration.

    Component ``i`` maximises ``|t(phi_1, ..., phi_N)|`` over unit vectors
    constrained orthogonal, within each mode, to the vectors of the earlier
    components.  Each mode update contracts the tensor with all other
    vectors, projects onto the orthogonal complement of the found vectors,
    and normalises; iteration stops when the objective change drops below
    ``tol``.  The best of ``restarts`` seeded random initialisations is kept.

    Parameters
    ----------
    t : Tensor or ndarray
    r : int
        Number of components to extract; at most ``min(dims)``.
    tol, max_iters, restarts, seed
        Iteration controls.  Results are deterministic given ``seed``.

    Returns
    -------
    TsvdResult
        May hold fewer than ``r`` components if the residual is exhausted;
        non-convergence is flagged per component, not fatal.
    """
    arr = t.array if isinstance(t, Tensor) else np.asarray(t, dtype=float)
    if r < 1:
        raise ValueError("need at least one component")
    if r > min(arr.shape):
        raise ValueError(
            f"cannot extract {r} mutually orthogonal components from dims {arr.shape}"
        )
    rng = np.random.default_rng(seed)

    if arr.size <= _TSVD_COMPRESS_THRESHOLD:
        return _tsvd_iterate(arr, r, tol, max_iters, restarts, rng)

    # Exact pre-compression: restrict to per-mode numerical row spaces.  Any
    # maximiser has no component in a mode kernel, so the optimisation over
    # the compressed core is equivalent.  Very wide modes are left alone;
    # their Gram matrices would cost more than they save.
    bases = []
    core = arr
    for mode in range(arr.ndim):
        if arr.shape[mode] > 1024:
            bases.append(None)
            continue
        q, s = _mode_basis(core, mode)
        keep = int(np.count_nonzero(s > 1e-13 * s[0])) if s.size and s[0] > 0 else 1
        keep = max(keep, 1)
        q = q[:, :keep]
        bases.append(q)
        core = np.moveaxis(np.tensordot(q.T, core, axes=([1], [mode])), 0, mode)
    result = _tsvd_iterate(core, min(r, min(core.shape)), tol, max_iters, restarts, rng)
    lifted = []
    for n in range(arr.ndim):
        vecs = result.vectors[n]
        if not vecs.size:
            lifted.append(np.zeros((arr.shape[n], 0)))
        elif bases[n] is None:
            lifted.append(vecs)
        else:
            lifted.append(bases[n] @ vecs)
    return TsvdResult(
        sigmas=result.sigmas,
        vectors=lifted,
        residual_norms=result.residual_norms,
        converged=result.converged,
    )


def orth_union(blocks, tol=1e-10):
    """Column-orthonormal basis for the sum of the column spaces of ``blocks``.

    Rank is decided at relative tolerance ``tol`` on the singular values of
    the stacked matrix.
    """
    if len(blocks) == 0:
        raise ValueError("orth_union needs at least one block")
    mats = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    rows = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != rows:
            raise ValueError("all blocks must share the row count")
    stacked = np.hstack(mats)
    if stacked.shape[1] == 0:
        return np.zeros((rows, 0))
    u, s, _ = scipy.linalg.svd(stacked, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((rows, 0))
    rank = int(np.count_nonzero(s >= tol * s[0]))
    q, _ = _fix_column_signs(u[:, :rank])
    return q
