"""Tensor arithmetic against brute-force loop oracles."""

import itertools

import numpy as np
import pytest

from lpvred.tensor import (
    Tensor,
    contract,
    fold,
    frobenius,
    inner,
    modal_rank,
    mode_product,
    mode_rank,
    outer_product,
    unfold,
    vec_product,
)


def test_tensor_rejects_non_finite():
    with pytest.raises(ValueError):
        Tensor(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        Tensor(np.array([np.inf]))


def test_flat_linearisation_is_mode1_fastest():
    t = Tensor(np.arange(24.0).reshape(2, 3, 4))
    flat = t.data
    # entry (l0, l1, l2) at position l0 + 2*l1 + 6*l2
    for l0, l1, l2 in itertools.product(range(2), range(3), range(4)):
        assert flat[l0 + 2 * l1 + 6 * l2] == t.array[l0, l1, l2]
    back = Tensor.from_flat(flat, (2, 3, 4))
    assert np.array_equal(back.array, t.array)


def test_outer_product_basis_vectors():
    t = outer_product([[1.0, 0.0], [0.0, 1.0]])
    expected = np.zeros((2, 2))
    expected[0, 1] = 1.0
    assert np.array_equal(t.array, expected)


def test_outer_product_scalars():
    t = outer_product([[2.0], [3.0], [4.0]])
    assert t.dims == (1, 1, 1)
    assert t.array[0, 0, 0] == 24.0


def test_outer_product_entrywise_oracle():
    vecs = [np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([1.0, -1.0])]
    t = outer_product(vecs)
    for i, j, k in itertools.product(range(2), repeat=3):
        assert t.array[i, j, k] == vecs[0][i] * vecs[1][j] * vecs[2][k]


def test_outer_product_rejects_empty():
    with pytest.raises(ValueError):
        outer_product([])
    with pytest.raises(ValueError):
        outer_product([[1.0], []])


def test_mode_product_identity():
    rng = np.random.default_rng(0)
    t = Tensor(rng.standard_normal((3, 4, 2)))
    for n, size in enumerate(t.dims):
        out = mode_product(t, np.eye(size), n)
        assert np.allclose(out.array, t.array)


def test_mode_product_row_sum():
    t = Tensor(np.ones((2, 2, 2)))
    out = mode_product(t, np.array([[1.0, 1.0]]), 0)
    assert out.dims == (1, 2, 2)
    assert np.all(out.array == 2.0)


def test_mode_product_loop_oracle():
    rng = np.random.default_rng(1)
    t = rng.standard_normal((3, 4, 2))
    q = rng.standard_normal((5, 4))
    out = mode_product(Tensor(t), q, 1).array
    expected = np.zeros((3, 5, 2))
    for i in range(3):
        for r in range(5):
            for k in range(2):
                expected[i, r, k] = sum(t[i, l, k] * q[r, l] for l in range(4))
    assert np.allclose(out, expected, atol=1e-13)


def test_mode_product_shape_errors():
    t = Tensor(np.ones((2, 3)))
    with pytest.raises(ValueError):
        mode_product(t, np.ones((2, 4)), 1)
    with pytest.raises(ValueError):
        mode_product(t, np.ones((2, 2)), 5)


def test_contract_is_matrix_product_for_matrices():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 5))
    out = contract(Tensor(a), Tensor(b), 1, 0).array
    assert np.allclose(out, a @ b, atol=1e-13)


def test_contract_with_unit_vector_slices():
    rng = np.random.default_rng(3)
    t = rng.standard_normal((2, 3, 4))
    e1 = np.zeros(3)
    e1[1] = 1.0
    out = contract(Tensor(t), Tensor(e1), 1, 0).array
    assert np.allclose(out, t[:, 1, :])


def test_contract_quadruple_loop_oracle():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((2, 3, 2))
    b = rng.standard_normal((3, 2, 2))
    out = contract(Tensor(a), Tensor(b), 1, 0).array
    expected = np.zeros((2, 2, 2, 2))
    for i, k, j, l in itertools.product(range(2), repeat=4):
        expected[i, k, j, l] = sum(a[i, m, k] * b[m, j, l] for m in range(3))
    assert np.allclose(out, expected, atol=1e-13)


def test_contract_dim_mismatch():
    with pytest.raises(ValueError):
        contract(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))), 1, 0)


def test_inner_is_squared_norm_on_self():
    rng = np.random.default_rng(5)
    t = Tensor(rng.standard_normal((3, 2, 2)))
    assert inner(t, t) == pytest.approx(frobenius(t) ** 2, rel=1e-13)


def test_inner_orthogonal_rank_ones():
    e1 = [1.0, 0.0]
    e2 = [0.0, 1.0]
    assert inner(outer_product([e1, e1]), outer_product([e2, e2])) == 0.0


def test_inner_entrywise_oracle():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((2, 3, 2))
    b = rng.standard_normal((2, 3, 2))
    expected = sum(
        a[i, j, k] * b[i, j, k] for i, j, k in itertools.product(range(2), range(3), range(2))
    )
    assert inner(Tensor(a), Tensor(b)) == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        inner(Tensor(a), Tensor(np.ones((2, 2))))


def test_frobenius_cases():
    assert frobenius(Tensor(np.zeros((2, 3)))) == 0.0
    rng = np.random.default_rng(7)
    u, v, w = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(2)
    t = outer_product([u, v, w])
    expected = np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(w)
    assert frobenius(t) == pytest.approx(expected, rel=1e-12)
    a = rng.standard_normal((3, 3, 3))
    assert frobenius(Tensor(a)) == pytest.approx(np.sqrt(np.sum(a * a)), rel=1e-13)


def test_unfold_matrix_cases():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((3, 4))
    assert np.array_equal(unfold(Tensor(a), 0), a)
    assert np.array_equal(unfold(Tensor(a), 1), a.T)


def test_unfold_fold_round_trip():
    rng = np.random.default_rng(9)
    t = Tensor(rng.standard_normal((2, 2, 2)))
    for n in range(3):
        mat = unfold(t, n)
        assert mat.shape == (2, 4)
        assert np.array_equal(fold(mat, n, t.dims).array, t.array)
    t4 = Tensor(rng.standard_normal((3, 2, 4, 2)))
    for n in range(4):
        assert np.array_equal(fold(unfold(t4, n), n, t4.dims).array, t4.array)


def test_unfold_column_order_cycles_remaining_modes_ascending():
    t = Tensor(np.arange(8.0).reshape(2, 2, 2))
    mat = unfold(t, 1)
    # column index = l0 + 2*l2 for entry (l0, l1, l2)
    for l0, l1, l2 in itertools.product(range(2), repeat=3):
        assert mat[l1, l0 + 2 * l2] == t.array[l0, l1, l2]


def test_mode_rank_rank_one_and_zero():
    t = outer_product([[1.0, 2.0], [3.0, 1.0], [1.0, 1.0, 1.0]])
    assert modal_rank(t) == (1, 1, 1)
    z = Tensor(np.zeros((2, 3, 2)))
    assert modal_rank(z) == (0, 0, 0)


def test_mode_rank_superdiagonal():
    t = np.zeros((3, 3, 3))
    for i, s in enumerate((3.0, 2.0, 1.0)):
        t[i, i, i] = s
    assert modal_rank(Tensor(t)) == (3, 3, 3)
    with pytest.raises(ValueError):
        mode_rank(Tensor(t), 0, tol=0.0)


def test_vec_product_drops_mode():
    rng = np.random.default_rng(10)
    t = rng.standard_normal((3, 4, 2))
    v = rng.standard_normal(4)
    out = vec_product(Tensor(t), v, 1)
    assert out.shape == (3, 2)
    assert np.allclose(out, np.einsum("ijk,j->ik", t, v))


def test_mode_product_associativity_along_mode():
    rng = np.random.default_rng(11)
    t = Tensor(rng.standard_normal((3, 4, 2)))
    q = rng.standard_normal((6, 4))
    p = rng.standard_normal((2, 6))
    lhs = mode_product(mode_product(t, q, 1), p, 1).array
    rhs = mode_product(t, p @ q, 1).array
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_cauchy_schwarz_over_random_draws():
    rng = np.random.default_rng(12)
    for _ in range(25):
        dims = tuple(rng.integers(1, 5, size=rng.integers(1, 5)))
        a = Tensor(rng.standard_normal(dims))
        b = Tensor(rng.standard_normal(dims))
        assert abs(inner(a, b)) <= frobenius(a) * frobenius(b) + 1e-12
