"""Nonlinear mass-spring-damper chains, their affine LPV embedding and datasets."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .model import AffineLpvSs, SchedulingMap, Trajectory

__all__ = [
    "MsdChain",
    "DatasetBundle",
    "BenchmarkConfig",
    "build_msd",
    "msd_rhs",
    "total_energy",
    "embed_lpv",
    "discretize_euler",
    "simulate_nl",
    "gen_input",
    "make_datasets",
    "load_config",
]


@dataclass
class MsdChain:
    """Chain of masses tied to a wall and to their neighbours.

    Every mass carries a wall spring and damper; adjacent masses share an
    interconnection spring and damper.  The wall springs of the trailing
    ``n_nonlinear`` masses, and the interconnection springs whose
    higher-indexed mass is among them, additionally carry a cubic term.
    The external force drives the last mass; the output is its position.
    """

    n_masses: int
    n_nonlinear: int
    mass: float = 0.1
    k_lin: float = 0.5
    k_cub: float = 0.5
    damping: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_nonlinear <= self.n_masses:
            raise ValueError("need 1 <= n_nonlinear <= n_masses")
        if min(self.mass, self.k_lin, self.k_cub, self.damping) <= 0:
            raise ValueError("physical parameters must be positive")

    @property
    def wall_nonlinear(self):
        """Mass indices (0-based) with a cubic wall spring."""
        return list(range(self.n_masses - self.n_nonlinear, self.n_masses))

    @property
    def ic_nonlinear(self):
        """Pairs (i, i+1) joined by a cubic interconnection spring."""
        first = max(self.n_masses - self.n_nonlinear, 1)
        return [(i - 1, i) for i in range(first, self.n_masses)]

    @property
    def n_p(self):
        """One scheduling variable per cubic spring."""
        return len(self.wall_nonlinear) + len(self.ic_nonlinear)

    @property
    def n_x(self):
        return 2 * self.n_masses


def build_msd(n_masses, n_nonlinear, mass=0.1, k_lin=0.5, k_cub=0.5, damping=1.0):
    """Construct a chain; see :class:`MsdChain` for the nonlinear spring layout."""
    return MsdChain(n_masses=n_masses, n_nonlinear=n_nonlinear, mass=mass,
                    k_lin=k_lin, k_cub=k_cub, damping=damping)


def _pair_forces(chain, q, qd):
    """Force of each interconnection spring on its lower-indexed mass,
    with the opposite sign acting on the higher-indexed one."""
    dq = q[:-1] - q[1:]
    dv = qd[:-1] - qd[1:]
    f = chain.k_lin * dq + chain.damping * dv
    cubic_from = max(chain.n_masses - chain.n_nonlinear, 1) - 1
    f[cubic_from:] += chain.k_cub * dq[cubic_from:] ** 3
    return f


def msd_rhs(chain, q, qd, u):
    """Accelerations of every mass for the given positions and velocities."""
    q = np.asarray(q, dtype=float).ravel()
    qd = np.asarray(qd, dtype=float).ravel()
    if q.size != chain.n_masses or qd.size != chain.n_masses:
        raise ValueError(f"state vectors must have length {chain.n_masses}")
    wall = chain.k_lin * q + chain.damping * qd
    nl = chain.wall_nonlinear
    wall[nl] += chain.k_cub * q[nl] ** 3
    force = -wall
    if chain.n_masses > 1:
        f = _pair_forces(chain, q, qd)
        force[:-1] -= f
        force[1:] += f
    force[-1] += float(np.asarray(u).ravel()[0]) if np.ndim(u) else float(u)
    return force / chain.mass


def total_energy(chain, x):
    """Kinetic plus elastic potential energy of a state vector."""
    m = chain.n_masses
    q, qd = np.asarray(x[:m], float), np.asarray(x[m:], float)
    e = 0.5 * chain.mass * np.sum(qd ** 2) + 0.5 * chain.k_lin * np.sum(q ** 2)
    e += 0.25 * chain.k_cub * np.sum(q[chain.wall_nonlinear] ** 4)
    if m > 1:
        dq = q[:-1] - q[1:]
        e += 0.5 * chain.k_lin * np.sum(dq ** 2)
        cubic_from = max(m - chain.n_nonlinear, 1) - 1
        e += 0.25 * chain.k_cub * np.sum(dq[cubic_from:] ** 4)
    return float(e)


def embed_lpv(chain):
    """Exact affine LPV embedding of the chain, in continuous time.

    Each cubic spring gets one scheduling variable, the squared elongation,
    so its force ``k_cub e^3`` reads ``(k_cub p) e`` and enters the state
    matrix affinely; the input, output and feedthrough tensors stay constant.

    Returns
    -------
    (AffineLpvSs, SchedulingMap)
        Continuous-time coefficient tensors and the scheduling map
        evaluating the squared elongations.
    """
    m = chain.n_masses
    n_x, n_p = chain.n_x, chain.n_p
    inv_m = 1.0 / chain.mass

    a = np.zeros((n_x, n_x, n_p + 1))
    a0 = a[:, :, 0]
    a0[:m, m:] = np.eye(m)
    stiff = np.zeros((m, m))
    damp = np.zeros((m, m))
    np.fill_diagonal(stiff, chain.k_lin)
    np.fill_diagonal(damp, chain.damping)
    for i in range(m - 1):
        for lo, hi in ((i, i + 1), (i + 1, i)):
            stiff[lo, lo] += chain.k_lin
            stiff[lo, hi] -= chain.k_lin
            damp[lo, lo] += chain.damping
            damp[lo, hi] -= chain.damping
    a0[m:, :m] = -inv_m * stiff
    a0[m:, m:] = -inv_m * damp

    channel = 1
    for i in chain.wall_nonlinear:
        a[m + i, i, channel] = -chain.k_cub * inv_m
        channel += 1
    for i, j in chain.ic_nonlinear:
        a[m + i, i, channel] -= chain.k_cub * inv_m
        a[m + i, j, channel] += chain.k_cub * inv_m
        a[m + j, j, channel] -= chain.k_cub * inv_m
        a[m + j, i, channel] += chain.k_cub * inv_m
        channel += 1

    b = np.zeros((n_x, 1, n_p + 1))
    b[m + (m - 1), 0, 0] = inv_m
    c = np.zeros((1, n_x, n_p + 1))
    c[0, m - 1, 0] = 1.0
    d = np.zeros((1, 1, n_p + 1))

    wall = list(chain.wall_nonlinear)
    pairs = list(chain.ic_nonlinear)

    def eta_fn(x, _u):
        q = x[:m]
        vals = [q[i] ** 2 for i in wall]
        vals += [(q[i] - q[j]) ** 2 for i, j in pairs]
        return np.asarray(vals)

    eta = SchedulingMap(fn=eta_fn, n_p=n_p, description="squared spring elongations")
    return AffineLpvSs(a=a, b=b, c=c, d=d, affine_flag=True), eta


def discretize_euler(ct_model, t_step):
    """Forward-Euler discretisation preserving the affine structure exactly.

    The constant channel of the state tensor becomes ``I + t_step * A_0``;
    every other channel, and the input tensor, is scaled by ``t_step``;
    output and feedthrough are unchanged.
    """
    if t_step <= 0:
        raise ValueError("time step must be positive")
    a = t_step * ct_model.a
    a[:, :, 0] += np.eye(ct_model.n_x)
    return AffineLpvSs(a=a, b=t_step * ct_model.b, c=ct_model.c.copy(),
                       d=ct_model.d.copy(), affine_flag=True)


def simulate_nl(chain, u, x0=None, t_step=1e-3, label=""):
    """Integrate the nonlinear chain with classical fixed-step RK4.

    The input is held constant over each step; states are recorded at the
    sample instants and the scheduling channel is filled from the squared
    elongations.
    """
    u = np.asarray(u, dtype=float).ravel()
    steps = u.size
    if steps < 1:
        raise ValueError("need at least one sample")
    m = chain.n_masses
    x = np.zeros(chain.n_x) if x0 is None else np.asarray(x0, dtype=float).ravel()

    _, eta = embed_lpv(chain)

    def f(state, force):
        q, qd = state[:m], state[m:]
        return np.concatenate([qd, msd_rhs(chain, q, qd, force)])

    xs = np.zeros((steps, chain.n_x))
    ys = np.zeros((steps, 1))
    ps = np.zeros((steps, chain.n_p))
    diverged_at = None
    h = t_step
    for t in range(steps):
        xs[t] = x
        ys[t, 0] = x[m - 1]
        ps[t] = eta(x, u[t])
        k1 = f(x, u[t])
        k2 = f(x + 0.5 * h * k1, u[t])
        k3 = f(x + 0.5 * h * k2, u[t])
        k4 = f(x + h * k3, u[t])
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e12:
            diverged_at = t
            xs, ys, ps, u = xs[: t + 1], ys[: t + 1], ps[: t + 1], u[: t + 1]
            break
    return Trajectory(t_step=t_step, u=u[:, None], p=ps, x=xs, y=ys,
                      label=label, diverged_at=diverged_at)


def gen_input(kind, seed, n_samples, t_step, amplitude=1.0, extra_factor=3.0):
    """Seeded excitation signal: a step train followed by a multi-sine.

    The first half is four equal-length steps with levels drawn uniformly
    from ``[-amplitude, amplitude]``; the second half is half the amplitude
    times a sum of ten sines with random phases and log-uniform frequencies
    between 0.5 rad/s and ``min(20, 0.2 / t_step)`` rad/s.  ``kind='extra'``
    scales the whole signal by ``extra_factor``.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if kind not in ("red", "val", "extra"):
        raise ValueError(f"unknown dataset kind '{kind}'")
    rng = np.random.default_rng(seed)
    scale = amplitude * (extra_factor if kind == "extra" else 1.0)

    u = np.zeros(n_samples)
    half = n_samples // 2
    bounds = np.linspace(0, half, 5).astype(int)
    levels = rng.uniform(-1.0, 1.0, size=4)
    for seg in range(4):
        u[bounds[seg]:bounds[seg + 1]] = levels[seg]

    t = np.arange(n_samples - half) * t_step
    w_hi = min(20.0, 0.2 / t_step)
    freqs = np.exp(rng.uniform(np.log(0.5), np.log(w_hi), size=10))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=10)
    sine = np.zeros_like(t)
    for w, ph in zip(freqs, phases):
        sine += np.sin(w * t + ph)
    u[half:] = 0.5 * sine
    return scale * u


@dataclass
class DatasetBundle:
    """Reduction, validation and extrapolation trajectories plus their recipe."""

    red: Trajectory
    val: Trajectory
    extra: Trajectory
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        steps = {self.red.t_step, self.val.t_step, self.extra.t_step}
        if len(steps) != 1:
            raise ValueError("datasets must share the sampling time")
        for name in ("red", "val", "extra"):
            traj = getattr(self, name)
            if np.any(traj.x[0] != 0.0):
                raise ValueError(f"dataset '{name}' must start from the origin")

    def items(self):
        return (("red", self.red), ("val", self.val), ("extra", self.extra))


def make_datasets(chain, n_samples, t_step, seeds=(11, 22, 33), amplitude=1.0,
                  extra_factor=3.0):
    """Simulate the nonlinear chain under the three excitation signals."""
    kinds = ("red", "val", "extra")
    trajs = {}
    for kind, seed in zip(kinds, seeds):
        u = gen_input(kind, seed, n_samples, t_step, amplitude, extra_factor)
        trajs[kind] = simulate_nl(chain, u, t_step=t_step, label=kind)
    meta = {"seeds": dict(zip(kinds, seeds)), "amplitude": amplitude,
            "extra_factor": extra_factor, "t_step": t_step,
            "n_samples": n_samples}
    return DatasetBundle(red=trajs["red"], val=trajs["val"], extra=trajs["extra"],
                         meta=meta)


@dataclass
class BenchmarkConfig:
    """Parsed experiment configuration: chain, dataset recipe, reducer grid."""

    chain: MsdChain
    n_samples: int
    t_step: float
    seeds: tuple
    amplitude: float
    extra_factor: float
    reducers: list
    raw_text: str = ""

    def build_datasets(self):
        return make_datasets(self.chain, self.n_samples, self.t_step, self.seeds,
                             self.amplitude, self.extra_factor)


def _parse_reducer_line(line):
    parts = line.split()
    spec = {"method": parts[0].lower()}
    for token in parts[1:]:
        if "=" not in token:
            raise ValueError(f"malformed reducer token '{token}' in '{line}'")
        key, val = token.split("=", 1)
        spec[key.lower()] = val
    return spec


def load_config(path):
    """Read an INI experiment configuration.

    Sections: ``[benchmark]`` (masses, nonlinear_masses, mass, k_linear,
    k_cubic, damping), ``[datasets]`` (t_step, samples, seed_red/val/extra,
    amplitude, extra_factor) and ``[reducers]`` with a multi-line ``runs``
    value, one reducer per line, e.g. ``tmm mode=R decomp=hosvd horizon=2``.
    """
    parser = configparser.ConfigParser()
    with open(path) as fh:
        text = fh.read()
    parser.read_string(text)
    bench = parser["benchmark"]
    chain = build_msd(
        n_masses=bench.getint("masses"),
        n_nonlinear=bench.getint("nonlinear_masses"),
        mass=bench.getfloat("mass", 0.1),
        k_lin=bench.getfloat("k_linear", 0.5),
        k_cub=bench.getfloat("k_cubic", 0.5),
        damping=bench.getfloat("damping", 1.0),
    )
    data = parser["datasets"]
    reducers = []
    if parser.has_section("reducers"):
        for line in parser["reducers"].get("runs", "").strip().splitlines():
            line = line.strip()
            if line:
                reducers.append(_parse_reducer_line(line))
    return BenchmarkConfig(
        chain=chain,
        n_samples=data.getint("samples", 6000),
        t_step=data.getfloat("t_step", 1e-3),
        seeds=(data.getint("seed_red", 11), data.getint("seed_val", 22),
               data.getint("seed_extra", 33)),
        amplitude=data.getfloat("amplitude", 1.0),
        extra_factor=data.getfloat("extra_factor", 3.0),
        reducers=reducers,
        raw_text=text,
    )
