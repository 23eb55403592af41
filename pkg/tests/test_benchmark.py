"""MSD chain physics, LPV embedding exactness and dataset generation."""

import numpy as np
import pytest

from lpvred.benchmark import (
    build_msd,
    discretize_euler,
    embed_lpv,
    gen_input,
    load_config,
    make_datasets,
    msd_rhs,
    simulate_nl,
    total_energy,
)
from lpvred.metrics import nrmse
from lpvred.model import simulate


def test_build_msd_spring_layout():
    small = build_msd(5, 2)
    assert small.n_x == 10
    assert small.wall_nonlinear == [3, 4]
    assert small.ic_nonlinear == [(2, 3), (3, 4)]
    assert small.n_p == 4

    big = build_msd(50, 50)
    assert big.n_x == 100
    assert len(big.wall_nonlinear) == 50
    assert len(big.ic_nonlinear) == 49
    assert big.n_p == 99

    single = build_msd(1, 1)
    assert single.n_p == 1
    assert single.ic_nonlinear == []

    with pytest.raises(ValueError):
        build_msd(3, 4)
    with pytest.raises(ValueError):
        build_msd(3, 0)


def test_rhs_equilibrium():
    chain = build_msd(4, 2)
    acc = msd_rhs(chain, np.zeros(4), np.zeros(4), 0.0)
    assert np.all(acc == 0.0)


def test_rhs_hooke_single_mass():
    chain = build_msd(1, 1)
    # unit displacement, no velocity: cubic and linear wall springs act
    acc = msd_rhs(chain, [1.0], [0.0], 0.0)
    expected = -(chain.k_lin * 1.0 + chain.k_cub * 1.0) / chain.mass
    assert acc[0] == pytest.approx(expected, rel=1e-14)


def test_rhs_newtons_third_law():
    # The force a pair spring applies to its two masses must cancel; checked
    # by comparing against an explicit per-pair force evaluation.
    chain = build_msd(6, 3)
    rng = np.random.default_rng(0)
    for _ in range(100):
        q = rng.standard_normal(6)
        qd = rng.standard_normal(6)
        acc = msd_rhs(chain, q, qd, 0.0)
        forces = np.zeros(6)
        for i in range(6):
            f_wall = chain.k_lin * q[i] + chain.damping * qd[i]
            if i in chain.wall_nonlinear:
                f_wall += chain.k_cub * q[i] ** 3
            forces[i] -= f_wall
        for i, j in [(k, k + 1) for k in range(5)]:
            f = chain.k_lin * (q[i] - q[j]) + chain.damping * (qd[i] - qd[j])
            if (i, j) in chain.ic_nonlinear:
                f += chain.k_cub * (q[i] - q[j]) ** 3
            forces[i] -= f
            forces[j] += f  # reaction: equal and opposite
        assert np.allclose(acc, forces / chain.mass, atol=1e-12)


def test_embedding_matches_nonlinear_rhs():
    # A(eta(x)) x + B u must equal the nonlinear right-hand side everywhere.
    chain = build_msd(5, 2)
    ct, eta = embed_lpv(chain)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.standard_normal(10)
        u = rng.standard_normal(1)
        p = eta(x, u)
        pbar = np.concatenate(([1.0], p))
        xdot = (ct.a @ pbar) @ x + (ct.b @ pbar) @ u
        q, qd = x[:5], x[5:]
        expected = np.concatenate([qd, msd_rhs(chain, q, qd, u[0])])
        assert np.allclose(xdot, expected, atol=1e-11)


def test_embedding_dimensions():
    chain = build_msd(50, 50)
    ct, eta = embed_lpv(chain)
    assert ct.n_x == 100
    assert ct.n_p == 99
    assert eta.n_p == 99


def test_embedding_linear_at_zero_scheduling():
    chain = build_msd(3, 1)
    ct, _ = embed_lpv(chain)
    a0 = ct.a[:, :, 0]
    # cubic channels vanish: base slice is the linear chain
    lin = build_msd(3, 1, k_cub=1e-30)
    rng = np.random.default_rng(2)
    x = rng.standard_normal(6)
    xdot = a0 @ x
    q, qd = x[:3], x[3:]
    expected = np.concatenate([qd, msd_rhs(lin, q, qd, 0.0)])
    assert np.allclose(xdot, expected, atol=1e-9)


def test_frozen_scheduling_replay_reproduces_nonlinear():
    chain = build_msd(5, 2)
    ct, eta = embed_lpv(chain)
    dt = discretize_euler(ct, 1e-3)
    u = gen_input("red", 3, 2000, 1e-3, amplitude=1.5)
    nl = simulate_nl(chain, u, t_step=1e-3)
    replay = simulate(dt, nl.p, u)
    assert nrmse(nl.y, replay.y) < 1.0
    assert np.abs(nl.x - replay.x).max() < 0.05 * max(1.0, np.abs(nl.x).max())


def test_discretize_euler_structure():
    chain = build_msd(3, 2)
    ct, _ = embed_lpv(chain)
    for td in (1e-3, 1e-5):
        dt = discretize_euler(ct, td)
        assert np.allclose(dt.a[:, :, 0], np.eye(6) + td * ct.a[:, :, 0], atol=1e-15)
        assert np.allclose(dt.a[:, :, 1:], td * ct.a[:, :, 1:], atol=1e-15)
        assert np.allclose(dt.b, td * ct.b, atol=1e-15)
        assert np.array_equal(dt.c, ct.c)
        assert np.array_equal(dt.d, ct.d)
    # td -> 0 limit: A(p) -> identity
    tiny = discretize_euler(ct, 1e-12)
    from lpvred.model import eval_matrices

    a, _, _, _ = eval_matrices(tiny, np.ones(ct.n_p))
    assert np.abs(a - np.eye(6)).max() < 1e-9
    with pytest.raises(ValueError):
        discretize_euler(ct, 0.0)


def test_scalar_euler_recurrence():
    # single linear state: x+ = (1 + td*a) x + td*b u
    a = np.array([[[-2.0]]])
    ct = __import__("lpvred").model.AffineLpvSs(
        a=a.reshape(1, 1, 1), b=np.ones((1, 1, 1)), c=np.ones((1, 1, 1)),
        d=np.zeros((1, 1, 1)))
    dt = discretize_euler(ct, 0.1)
    traj = simulate(dt, np.zeros((5, 0)), np.ones((5, 1)))
    x = 0.0
    for t in range(5):
        assert traj.x[t, 0] == pytest.approx(x, abs=1e-14)
        x = (1 - 0.2) * x + 0.1
    assert dt.n_p == 0


def test_simulate_nl_rest():
    chain = build_msd(3, 1)
    traj = simulate_nl(chain, np.zeros(100))
    assert np.all(traj.x == 0.0)
    assert np.all(traj.y == 0.0)


def test_simulate_nl_step_halving_convergence():
    chain = build_msd(4, 2)
    u_coarse = gen_input("red", 7, 500, 2e-3, amplitude=1.0)
    coarse = simulate_nl(chain, u_coarse, t_step=2e-3)
    u_fine = np.repeat(u_coarse, 2)
    fine = simulate_nl(chain, u_fine, t_step=1e-3)
    gap = np.abs(fine.x[::2] - coarse.x).max()
    scale = max(1.0, np.abs(fine.x).max())
    assert gap / scale < 1e-6


def test_simulate_nl_energy_dissipation():
    chain = build_msd(5, 2)
    rng = np.random.default_rng(4)
    for _ in range(100):
        x0 = rng.standard_normal(10)
        traj = simulate_nl(chain, np.zeros(50), x0=x0, t_step=1e-3)
        energies = [total_energy(chain, x) for x in traj.x]
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-10 * max(1.0, energies[0]))


def test_gen_input_determinism_and_scaling():
    a = gen_input("red", 5, 1000, 1e-3)
    b = gen_input("red", 5, 1000, 1e-3)
    assert np.array_equal(a, b)
    zero = gen_input("val", 5, 1000, 1e-3, amplitude=0.0)
    assert np.all(zero == 0.0)
    base = gen_input("red", 5, 1000, 1e-3, amplitude=1.0)
    extra = gen_input("extra", 5, 1000, 1e-3, amplitude=1.0, extra_factor=3.0)
    assert np.abs(extra).max() / np.abs(base).max() == pytest.approx(3.0, rel=1e-12)
    with pytest.raises(ValueError):
        gen_input("test", 5, 10, 1e-3)


def test_make_datasets_common_grid_and_origin():
    chain = build_msd(3, 1)
    ds = make_datasets(chain, 200, 1e-3, seeds=(1, 2, 3))
    for name, traj in ds.items():
        assert np.all(traj.x[0] == 0.0)
        assert traj.t_step == 1e-3
        assert len(traj) == 200
    assert ds.meta["seeds"] == {"red": 1, "val": 2, "extra": 3}


def test_load_config(tmp_path):
    text = """
[benchmark]
masses = 4
nonlinear_masses = 2

[datasets]
samples = 300
seed_red = 7
seed_val = 8
seed_extra = 9
amplitude = 1.5

[reducers]
runs =
    tmm mode=R decomp=hosvd horizon=2
    pod variant=weighted rx=3 rp=2
"""
    path = tmp_path / "bench.ini"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.chain.n_masses == 4
    assert cfg.n_samples == 300
    assert cfg.seeds == (7, 8, 9)
    assert cfg.amplitude == 1.5
    assert cfg.reducers[0] == {"method": "tmm", "mode": "R", "decomp": "hosvd",
                               "horizon": "2"}
    assert cfg.reducers[1]["variant"] == "weighted"
    ds = cfg.build_datasets()
    assert len(ds.red) == 300
