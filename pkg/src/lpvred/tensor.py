"""Dense order-N tensor arithmetic: products, contractions, norms, unfoldings."""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "outer_product",
    "mode_product",
    "vec_product",
    "contract",
    "inner",
    "frobenius",
    "unfold",
    "fold",
    "mode_rank",
    "modal_rank",
]

DEFAULT_RANK_TOL = 1e-10


class Tensor:
    """Dense real tensor of order N >= 1.

    The flat linearisation (the ``data`` property) is mode-1-fastest, i.e.
    Fortran order: entry ``(l_0, ..., l_{N-1})`` lives at flat position
    ``l_0 + L_0*(l_1 + L_1*(l_2 + ...))``.  All public constructors and
    operations reject non-finite entries.
    """

    __slots__ = ("array",)

    def __init__(self, array, copy=True):
        arr = np.array(array, dtype=float, copy=copy)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.size == 0:
            raise ValueError("tensor must have at least one entry per mode")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor entries must be finite")
        self.array = arr

    @classmethod
    def from_flat(cls, data, dims):
        """Build a tensor from its mode-1-fastest flat linearisation."""
        flat = np.asarray(data, dtype=float)
        dims = tuple(int(d) for d in dims)
        if flat.size != int(np.prod(dims)):
            raise ValueError(
                f"flat data has {flat.size} entries, dims {dims} need {int(np.prod(dims))}"
            )
        return cls(flat.reshape(dims, order="F"))

    @property
    def dims(self):
        return self.array.shape

    @property
    def order(self):
        return self.array.ndim

    @property
    def size(self):
        return self.array.size

    @property
    def data(self):
        """Flat mode-1-fastest (Fortran order) copy of the entries."""
        return self.array.flatten(order="F")

    def __repr__(self):
        return f"Tensor(dims={self.dims})"


def _as_array(t):
    return t.array if isinstance(t, Tensor) else np.asarray(t, dtype=float)


def _check_mode(arr, mode):
    if not 0 <= mode < arr.ndim:
        raise ValueError(f"mode {mode} out of range for order-{arr.ndim} tensor")


def outer_product(vectors):
    """Outer product of one or more vectors.

    Parameters
    ----------
    vectors : sequence of 1-D arrays
        Factors ``v_0, ..., v_{N-1}``.

    Returns
    -------
    Tensor
        Order-N tensor with entry ``(l_0, ..., l_{N-1})`` equal to
        ``prod_n v_n[l_n]``.
    """
    if len(vectors) == 0:
        raise ValueError("outer_product needs at least one vector")
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    for v in vecs:
        if v.size == 0:
            raise ValueError("outer_product vectors must be nonempty")
    out = vecs[0]
    for v in vecs[1:]:
        out = np.multiply.outer(out, v)
    return Tensor(out, copy=False)


def mode_product(t, q, mode):
    """Multiply tensor ``t`` along ``mode`` with matrix ``q``.

    ``q`` has shape ``(R, L_mode)``; the result replaces dimension
    ``L_mode`` by ``R``:

        out[..., r, ...] = sum_l t[..., l, ...] * q[r, l]
    """
    arr = _as_array(t)
    _check_mode(arr, mode)
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape[1] != arr.shape[mode]:
        raise ValueError(
            f"matrix has {q.shape[1]} columns, mode {mode} has size {arr.shape[mode]}"
        )
    out = np.tensordot(q, arr, axes=([1], [mode]))
    out = np.moveaxis(out, 0, mode)
    return Tensor(out, copy=False)


def vec_product(t, v, mode):
    """Contract ``mode`` of ``t`` with vector ``v``, dropping that mode."""
    arr = _as_array(t)
    _check_mode(arr, mode)
    v = np.asarray(v, dtype=float).ravel()
    if v.size != arr.shape[mode]:
        raise ValueError(f"vector length {v.size} != mode {mode} size {arr.shape[mode]}")
    return np.tensordot(arr, v, axes=([mode], [0]))


def contract(t, s, i, k):
    """Tensor-tensor product summing mode ``i`` of ``t`` against mode ``k`` of ``s``.

    The result carries the modes of ``t`` without ``i`` followed by the
    modes of ``s`` without ``k``.
    """
    a, b = _as_array(t), _as_array(s)
    _check_mode(a, i)
    _check_mode(b, k)
    if a.shape[i] != b.shape[k]:
        raise ValueError(
            f"contracted modes differ in size: {a.shape[i]} vs {b.shape[k]}"
        )
    out = np.tensordot(a, b, axes=([i], [k]))
    if out.ndim == 0:
        out = out.reshape(1)
    return Tensor(out, copy=False)


def inner(t, s):
    """Entrywise inner product of two same-shaped tensors."""
    a, b = _as_array(t), _as_array(s)
    if a.shape != b.shape:
        raise ValueError(f"inner product needs equal dims, got {a.shape} and {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frobenius(t):
    """Frobenius norm, the square root of the self inner product."""
    return float(np.linalg.norm(_as_array(t).ravel()))


def unfold(t, mode):
    """Matricise ``t`` along ``mode``.

    Returns the ``L_mode x prod(other dims)`` matrix whose columns cycle
    the remaining modes in ascending index order (lowest remaining mode
    fastest).  ``fold`` inverts this exactly.
    """
    arr = _as_array(t)
    _check_mode(arr, mode)
    return np.moveaxis(arr, mode, 0).reshape(arr.shape[mode], -1, order="F")


def fold(mat, mode, dims):
    """Inverse of :func:`unfold`: rebuild the tensor with shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    mat = np.asarray(mat, dtype=float)
    rest = [d for j, d in enumerate(dims) if j != mode]
    arr = mat.reshape([dims[mode]] + rest, order="F")
    return Tensor(np.moveaxis(arr, 0, mode))


def mode_rank(t, mode, tol=DEFAULT_RANK_TOL):
    """Numerical rank of the mode-``mode`` unfolding.

    Counts singular values at or above ``tol`` times the largest one.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    s = np.linalg.svd(unfold(t, mode), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s >= tol * s[0]))


def modal_rank(t, tol=DEFAULT_RANK_TOL):
    """Vector of all n-mode ranks."""
    arr = _as_array(t)
    return tuple(mode_rank(arr, n, tol) for n in range(arr.ndim))
