"""Quick seeded property checks runnable from the CLI without pytest."""

from __future__ import annotations

import numpy as np

from .benchmark import build_msd, discretize_euler, embed_lpv, msd_rhs, simulate_nl, total_energy
from .decomp import hosvd, orth_union, tsvd
from .metrics import nrmse
from .model import AffineLpvSs, simulate
from .pod import SnapshotSet, cost_eval, pod_weighted, verify_bounds, weighted_eigpairs
from .projection import ProjectionTriple, petrov_galerkin, reduce_scheduling_sequence
from .tensor import Tensor, frobenius, inner, mode_product, outer_product
from .tmm import tmm_reduce


def _random_model(rng, n_x=4, n_u=1, n_y=1, n_p=2, decay=0.9):
    a = 0.1 * rng.standard_normal((n_x, n_x, n_p + 1))
    a[:, :, 0] = decay * np.eye(n_x) + 0.05 * rng.standard_normal((n_x, n_x))
    b = rng.standard_normal((n_x, n_u, n_p + 1))
    c = rng.standard_normal((n_y, n_x, n_p + 1))
    d = rng.standard_normal((n_y, n_u, n_p + 1))
    return AffineLpvSs(a=a, b=b, c=c, d=d)


def _check_tensor_identities(rng):
    t = Tensor(rng.standard_normal((3, 4, 2)))
    q = rng.standard_normal((5, 4))
    p = rng.standard_normal((2, 5))
    lhs = mode_product(mode_product(t, q, 1), p, 1).array
    rhs = mode_product(t, p @ q, 1).array
    assert np.allclose(lhs, rhs, atol=1e-12), "mode-product associativity failed"
    s = Tensor(rng.standard_normal((3, 4, 2)))
    assert abs(inner(t, s)) <= frobenius(t) * frobenius(s) + 1e-12, "Cauchy-Schwarz failed"


def _check_tsvd_diagonalizable(rng):
    u = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    v = np.linalg.qr(rng.standard_normal((4, 3)))[0]
    w = np.linalg.qr(rng.standard_normal((6, 3)))[0]
    sig = np.array([3.0, 2.0, 1.0])
    t = sum(sig[i] * outer_product([u[:, i], v[:, i], w[:, i]]).array for i in range(3))
    res = tsvd(Tensor(t), 3, seed=7)
    assert np.allclose(res.sigmas, sig, atol=1e-6), "TSVD missed planted singular values"
    rec = hosvd(Tensor(t)).reconstruct().array
    assert np.allclose(rec, t, atol=1e-10), "HOSVD reconstruction failed"


def _check_identity_projection(rng):
    model = _random_model(rng)
    n_x, n_p = model.n_x, model.n_p
    triple = ProjectionTriple(v=np.eye(n_x), w=np.eye(n_x), z=np.eye(n_p))
    reduced, _ = petrov_galerkin(model, triple)
    u = rng.standard_normal((100, model.n_u))
    p = 0.3 * rng.standard_normal((100, n_p))
    ref = simulate(model, p, u)
    red = simulate(reduced, reduce_scheduling_sequence(triple, p), u)
    gap = float(np.abs(ref.y - red.y).max())
    assert gap < 1e-9, f"identity projection changed the outputs by {gap:.2e}"


def _check_moment_matching(rng):
    model = _random_model(rng, n_x=5, n_p=2, decay=0.5)
    horizon = 2
    reduced, _, spaces, _ = tmm_reduce(model, "R", "hosvd", horizon, tol=1e-12)
    u = rng.standard_normal((horizon + 2, model.n_u))
    p = rng.standard_normal((horizon + 2, model.n_p))
    ref = simulate(model, p, u)
    red = simulate(reduced, reduce_scheduling_sequence(spaces.triple, p), u)
    lifted = red.x @ spaces.triple.v.T
    gap = float(np.abs(lifted - ref.x).max())
    assert gap < 1e-7, f"reachability-mode state matching off by {gap:.2e}"


def _check_pod_costs(rng):
    snap = SnapshotSet(m_x=rng.standard_normal((6, 40)), m_p=rng.standard_normal((3, 40)),
                       m_delta=rng.standard_normal((6, 39)))
    triple = pod_weighted(snap, 3, 2)
    costs = cost_eval(snap, triple)
    lhs = costs.j_xp
    rhs = costs.j_xp_a + costs.j_xp_b - costs.j_xp_c
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs)), "joint-cost identity failed"
    (wx, _), (wp, _) = weighted_eigpairs(snap)
    tails = (float(np.sum(wx[3:])), float(np.sum(wp[2:])))
    assert verify_bounds(costs, tails)["all_hold"], "cost bounds violated"


def _check_benchmark(rng):
    chain = build_msd(4, 2)
    q = rng.standard_normal(4)
    qd = rng.standard_normal(4)
    acc = msd_rhs(chain, q, qd, 0.0)
    assert np.all(np.isfinite(acc))
    traj = simulate_nl(chain, np.zeros(200), x0=rng.standard_normal(8) * 0.5)
    energy = [total_energy(chain, x) for x in traj.x]
    assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(energy, energy[1:])), \
        "unforced energy increased"
    ct, eta = embed_lpv(chain)
    dt = discretize_euler(ct, 1e-3)
    u = 0.5 * np.ones(400)
    nl = simulate_nl(chain, u)
    lpv = simulate(dt, eta, u)
    assert nrmse(nl.y, lpv.y) < 2.0, "embedding co-simulation drifted"


CHECKS = [
    ("tensor identities", _check_tensor_identities),
    ("tsvd/hosvd on diagonalizable tensors", _check_tsvd_diagonalizable),
    ("identity projection equivalence", _check_identity_projection),
    ("reachability moment matching", _check_moment_matching),
    ("pod cost identities and bounds", _check_pod_costs),
    ("benchmark physics and embedding", _check_benchmark),
]


def run_selftest(seeds=range(3), echo=print):
    """Run every property check over a few seeds; returns True when all pass."""
    ok = True
    for name, check in CHECKS:
        failures = []
        for seed in seeds:
            try:
                check(np.random.default_rng(seed))
            except AssertionError as exc:
                failures.append(f"seed {seed}: {exc}")
        status = "PASS" if not failures else "FAIL"
        ok = ok and not failures
        echo(f"[{status}] {name}")
        for line in failures:
            echo(f"       {line}")
    return ok
