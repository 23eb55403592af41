"""Extended Petrov-Galerkin projection behaviour and signal projections."""

import numpy as np
import pytest

from lpvred.model import AffineLpvSs, simulate
from lpvred.projection import (
    ProjectionTriple,
    petrov_galerkin,
    project_signal,
    reduce_scheduling_sequence,
)


def random_model(seed, n_x=5, n_u=1, n_y=1, n_p=2, decay=0.7):
    rng = np.random.default_rng(seed)
    a = 0.05 * rng.standard_normal((n_x, n_x, n_p + 1))
    a[:, :, 0] = decay * np.eye(n_x) + 0.05 * rng.standard_normal((n_x, n_x))
    return AffineLpvSs(
        a=a,
        b=rng.standard_normal((n_x, n_u, n_p + 1)),
        c=rng.standard_normal((n_y, n_x, n_p + 1)),
        d=rng.standard_normal((n_y, n_u, n_p + 1)),
    ), rng


def test_identity_projection_reproduces_model():
    m, rng = random_model(0)
    triple = ProjectionTriple(v=np.eye(5), w=np.eye(5), z=np.eye(2))
    reduced, _ = petrov_galerkin(m, triple)
    assert np.allclose(reduced.a, m.a, atol=1e-13)
    u = rng.standard_normal((150, 1))
    p = 0.3 * rng.standard_normal((150, 2))
    ref = simulate(m, p, u)
    red = simulate(reduced, reduce_scheduling_sequence(triple, p), u)
    assert np.abs(ref.y - red.y).max() < 1e-9


def test_orthonormal_similarity_preserves_io():
    m, rng = random_model(1)
    q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    triple = ProjectionTriple(v=q, w=q, z=np.eye(2))
    reduced, _ = petrov_galerkin(m, triple)
    u = rng.standard_normal((200, 1))
    p = 0.3 * rng.standard_normal((200, 2))
    ref = simulate(m, p, u)
    red = simulate(reduced, reduce_scheduling_sequence(triple, p), u)
    assert np.abs(ref.y - red.y).max() < 1e-10


def test_galerkin_specialisation():
    m, rng = random_model(2)
    v = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    triple = ProjectionTriple(v=v, w=v, z=np.eye(2))
    reduced, _ = petrov_galerkin(m, triple)
    # (W^T V)^{-1} W^T collapses to V^T for orthonormal V
    expected = np.tensordot(np.tensordot(v.T, m.a, axes=([1], [0])), v,
                            axes=([1], [0])).transpose(0, 2, 1)
    zbar = np.zeros((3, 3))
    zbar[0, 0] = 1.0
    zbar[1:, 1:] = np.eye(2)
    expected = np.tensordot(expected, zbar, axes=([2], [0]))
    assert np.allclose(reduced.a, expected, atol=1e-12)


def test_residual_orthogonality_to_test_space():
    m, rng = random_model(3)
    v = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    w = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    triple = ProjectionTriple(v=v, w=w, z=np.eye(2))
    reduced, _ = petrov_galerkin(m, triple)
    u = rng.standard_normal((40, 1))
    p = 0.3 * rng.standard_normal((40, 2))
    p_r = reduce_scheduling_sequence(triple, p)
    red = simulate(reduced, p_r, u)
    from lpvred.model import eval_matrices

    for t in range(39):
        p_hat = triple.z @ p_r[t]
        a_mat, b_mat, _, _ = eval_matrices(m, p_hat)
        lifted_next = v @ red.x[t + 1]
        residual = lifted_next - (a_mat @ (v @ red.x[t]) + b_mat @ u[t])
        assert np.abs(w.T @ residual).max() < 1e-9


def test_affine_covering_scheduling_basis():
    m, rng = random_model(4)
    z = np.linalg.qr(rng.standard_normal((3, 2)))[0]  # acts on (1, p)
    v = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    triple = ProjectionTriple(v=v, w=v, z=z, z_includes_affine=True)
    reduced, _ = petrov_galerkin(m, triple)
    assert not reduced.affine_flag
    assert reduced.n_p == 2
    p = 0.3 * rng.standard_normal((30, 2))
    u = rng.standard_normal((30, 1))
    red = simulate(reduced, reduce_scheduling_sequence(triple, p), u)
    assert np.all(np.isfinite(red.y))


def test_reduced_scheduling_map_composition():
    from lpvred.model import SchedulingMap

    m, rng = random_model(5)
    v = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    eta = SchedulingMap(fn=lambda x, u: np.array([x[0] ** 2, x[1] * u[0]]), n_p=2)
    triple = ProjectionTriple(v=v, w=v, z=np.eye(2))
    _, reduced_map = petrov_galerkin(m, triple, eta)
    x_r = rng.standard_normal(3)
    u = rng.standard_normal(1)
    assert np.allclose(reduced_map(x_r, u), eta(v @ x_r, u), atol=1e-12)

    z = np.linalg.qr(rng.standard_normal((3, 2)))[0]
    triple2 = ProjectionTriple(v=v, w=v, z=z, z_includes_affine=True)
    _, map2 = petrov_galerkin(m, triple2, eta)
    expected = np.linalg.pinv(z) @ np.concatenate(([1.0], eta(v @ x_r, u)))
    assert np.allclose(map2(x_r, u), expected, atol=1e-12)


def test_singular_test_space_rejected():
    m, rng = random_model(6)
    v = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    w = np.zeros((5, 2))
    w[:, 0] = v[:, 1]
    w[:, 1] = v[:, 1] + 1e-15 * rng.standard_normal(5)
    with pytest.raises(Exception):
        # W is (numerically) rank deficient or W^T V singular
        petrov_galerkin(m, ProjectionTriple(v=v, w=w, z=np.eye(2)))


def test_wrong_shapes_rejected():
    m, rng = random_model(7)
    v = np.linalg.qr(rng.standard_normal((4, 2)))[0]
    with pytest.raises(ValueError):
        petrov_galerkin(m, ProjectionTriple(v=v, w=v, z=np.eye(2)))
    v5 = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    with pytest.raises(ValueError):
        petrov_galerkin(m, ProjectionTriple(v=v5, w=v5, z=np.eye(3)))


def test_project_signal_cases():
    rng = np.random.default_rng(8)
    basis = np.linalg.qr(rng.standard_normal((6, 3)))[0]
    inside = basis @ rng.standard_normal(3)
    coords, rec, resid = project_signal(basis, inside)
    assert resid < 1e-12
    assert np.allclose(rec, inside, atol=1e-12)

    outside = rng.standard_normal(6)
    outside -= basis @ (basis.T @ outside)
    coords, rec, resid = project_signal(basis, outside)
    assert np.abs(coords).max() < 1e-12

    s = rng.standard_normal(6)
    coords, rec, resid = project_signal(basis, s)
    assert np.linalg.norm(s) ** 2 == pytest.approx(
        np.linalg.norm(rec) ** 2 + resid ** 2, rel=1e-12
    )
    # residual orthogonal to the basis image
    assert np.abs(basis.T @ (s - rec)).max() < 1e-10


def test_project_signal_rank_deficient():
    basis = np.ones((4, 2))
    with pytest.raises(ValueError):
        project_signal(basis, np.ones(4))


def test_triple_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    triple = ProjectionTriple(
        v=rng.standard_normal((5, 2)),
        w=rng.standard_normal((5, 2)),
        z=rng.standard_normal((3, 2)),
        z_includes_affine=True,
        tag="tmm-R-hosvd",
    )
    path = tmp_path / "triple.txt"
    triple.save(path)
    back = ProjectionTriple.load(path)
    assert back.tag == triple.tag
    assert back.z_includes_affine
    for name in ("v", "w", "z"):
        assert np.array_equal(getattr(back, name), getattr(triple, name))
