"""Discrete-time affine LPV state-space models in tensor form: evaluation and simulation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AffineLpvSs",
    "SchedulingMap",
    "Trajectory",
    "eval_matrices",
    "simulate",
    "markov_coefficient",
    "param_count",
]

DIVERGENCE_LIMIT = 1e12


@dataclass
class AffineLpvSs:
    """Affine LPV-SS model stored as four order-3 coefficient stacks.

    ``a, b, c, d`` have shapes ``(n_x, n_x, m)``, ``(n_x, n_u, m)``,
    ``(n_y, n_x, m)``, ``(n_y, n_u, m)`` where ``m`` is the number of
    scheduling channels of the stored tensors.  With ``affine_flag`` set,
    channel 0 is the constant term and the model consumes scheduling
    vectors of length ``m - 1``; reduced models produced with a folded
    affine term clear the flag and consume vectors of length ``m``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    affine_flag: bool = True

    def __post_init__(self):
        self.a, self.b = np.asarray(self.a, float), np.asarray(self.b, float)
        self.c, self.d = np.asarray(self.c, float), np.asarray(self.d, float)
        for name, t in zip("abcd", (self.a, self.b, self.c, self.d)):
            if t.ndim != 3:
                raise ValueError(f"tensor {name} must be order 3, got {t.ndim}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"tensor {name} has non-finite entries")
        n_x, n_u, n_y, m = self.n_x, self.n_u, self.n_y, self.n_channels
        shapes = {
            "a": (n_x, n_x, m),
            "b": (n_x, n_u, m),
            "c": (n_y, n_x, m),
            "d": (n_y, n_u, m),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"tensor {name} has shape {got}, expected {want}")

    @property
    def n_x(self):
        return self.a.shape[0]

    @property
    def n_u(self):
        return self.b.shape[1]

    @property
    def n_y(self):
        return self.c.shape[0]

    @property
    def n_channels(self):
        """Mode-3 size shared by the four tensors."""
        return self.a.shape[2]

    @property
    def n_p(self):
        """Length of the scheduling vector the model consumes."""
        return self.n_channels - 1 if self.affine_flag else self.n_channels

    def extend_scheduling(self, p):
        """Prepend the constant channel when the model carries one."""
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.n_p:
            raise ValueError(f"scheduling vector has length {p.size}, expected {self.n_p}")
        if self.affine_flag:
            return np.concatenate(([1.0], p))
        return p


@dataclass
class SchedulingMap:
    """Evaluatable map ``(x, u) -> p`` giving the scheduling signal.

    Reduced maps record their composition (pseudo-inverse of the scheduling
    basis, state basis, inner map) but evaluate through a plain callable.
    """

    fn: object
    n_p: int
    description: str = "scheduling map"

    def __call__(self, x, u):
        p = np.asarray(self.fn(np.asarray(x, float), np.asarray(u, float)), float).ravel()
        if p.size != self.n_p:
            raise ValueError(f"scheduling map returned length {p.size}, expected {self.n_p}")
        return p

    @classmethod
    def from_sequence(cls, p_seq):
        """Map that replays a stored scheduling sequence (time-indexed)."""
        p_seq = np.atleast_2d(np.asarray(p_seq, dtype=float))
        state = {"t": 0}

        def replay(_x, _u):
            p = p_seq[min(state["t"], p_seq.shape[0] - 1)]
            state["t"] += 1
            return p

        return cls(fn=replay, n_p=p_seq.shape[1], description="replayed sequence")

    @classmethod
    def compose_reduced(cls, inner, v, z_pinv, includes_affine):
        """Reduced map ``p_r = Z^+ eta(V x_r, u)``, with the constant channel
        stacked on top of ``eta`` first when the scheduling basis acts on the
        affine-extended vector."""
        v = np.asarray(v, dtype=float)
        z_pinv = np.asarray(z_pinv, dtype=float)

        if includes_affine:
            def fn(x_r, u):
                full = inner(v @ x_r, u)
                return z_pinv @ np.concatenate(([1.0], full))
        else:
            def fn(x_r, u):
                return z_pinv @ inner(v @ x_r, u)

        return cls(fn=fn, n_p=z_pinv.shape[0],
                   description=f"reduced {inner.description}")


@dataclass
class Trajectory:
    """Sampled input, scheduling, state and output sequences on a common grid."""

    t_step: float
    u: np.ndarray
    p: np.ndarray
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    diverged_at: int | None = None

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.p = np.atleast_2d(np.asarray(self.p, dtype=float))
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        lengths = {self.u.shape[0], self.x.shape[0], self.y.shape[0]}
        if self.p.size:
            lengths.add(self.p.shape[0])
        if len(lengths) != 1:
            raise ValueError(f"sequence lengths differ: {sorted(lengths)}")

    def __len__(self):
        return self.u.shape[0]

    def to_csv(self, path):
        """Write ``t,u_*,p_*,x_*,y_*`` rows at full double precision."""
        cols = ["t"]
        cols += [f"u_{i}" for i in range(self.u.shape[1])]
        cols += [f"p_{i}" for i in range(self.p.shape[1])]
        cols += [f"x_{i}" for i in range(self.x.shape[1])]
        cols += [f"y_{i}" for i in range(self.y.shape[1])]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for t in range(len(self)):
                row = [repr(t * self.t_step)]
                for block in (self.u, self.p, self.x, self.y):
                    row += [f"{v:.17g}" for v in block[t]]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path, label=""):
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] == 0:
            raise ValueError(f"{path} holds no samples")
        widths = {"u": 0, "p": 0, "x": 0, "y": 0}
        for name in header[1:]:
            widths[name.split("_")[0]] += 1
        t_step = data[1, 0] - data[0, 0] if data.shape[0] > 1 else 1.0
        offs, blocks = 1, {}
        for key in ("u", "p", "x", "y"):
            blocks[key] = data[:, offs:offs + widths[key]]
            offs += widths[key]
        return cls(t_step=t_step, label=label, **blocks)


def eval_matrices(model, p):
    """System matrices ``A(p), B(p), C(p), D(p)`` at one scheduling vector."""
    pbar = model.extend_scheduling(p)
    return (model.a @ pbar, model.b @ pbar, model.c @ pbar, model.d @ pbar)


def simulate(model, scheduling, u, x0=None, divergence_limit=DIVERGENCE_LIMIT,
             t_step=1.0, label=""):
    """Run the state recursion of the model over an input sequence.

    Parameters
    ----------
    model : AffineLpvSs
    scheduling : SchedulingMap or array
        Either a map evaluated as ``p(t) = eta(x(t), u(t))`` before each
        state update, or an explicit ``(N, n_p)`` sequence.
    u : array, shape (N,) or (N, n_u)
    x0 : array or None
        Initial state, zero by default.

    Returns
    -------
    Trajectory
        With ``diverged_at`` set to the step index if the state norm passed
        ``divergence_limit``; the produced prefix is kept.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[1] != model.n_u:
        raise ValueError(f"input width {u.shape[1]} != n_u {model.n_u}")
    steps = u.shape[0]
    p_seq = None
    if not isinstance(scheduling, SchedulingMap):
        p_seq = np.asarray(scheduling, dtype=float)
        if p_seq.ndim == 1:
            p_seq = p_seq[:, None]
        if model.n_p == 0:
            p_seq = p_seq.reshape(steps, 0)
        if p_seq.shape != (steps, model.n_p):
            raise ValueError(
                f"scheduling sequence has shape {p_seq.shape}, expected {(steps, model.n_p)}"
            )

    x = np.zeros(model.n_x) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.size != model.n_x:
        raise ValueError(f"x0 has length {x.size}, expected {model.n_x}")

    xs = np.zeros((steps, model.n_x))
    ys = np.zeros((steps, model.n_y))
    ps = np.zeros((steps, model.n_p))
    # Flat channel-last views keep the per-step evaluation to four GEMVs.
    m = model.n_channels
    af = model.a.reshape(-1, m)
    bf = model.b.reshape(-1, m)
    cf = model.c.reshape(-1, m)
    df = model.d.reshape(-1, m)
    n_x, n_u, n_y = model.n_x, model.n_u, model.n_y
    affine = model.affine_flag
    pbar = np.empty(m)
    if affine:
        pbar[0] = 1.0
    limit_sq = divergence_limit ** 2
    diverged_at = None
    for t in range(steps):
        p = p_seq[t] if p_seq is not None else scheduling(x, u[t])
        if affine:
            pbar[1:] = p
        else:
            pbar[:] = p
        xs[t], ps[t] = x, p
        ys[t] = (cf @ pbar).reshape(n_y, n_x) @ x + (df @ pbar).reshape(n_y, n_u) @ u[t]
        x = (af @ pbar).reshape(n_x, n_x) @ x + (bf @ pbar).reshape(n_x, n_u) @ u[t]
        xn = float(x @ x)
        if not xn <= limit_sq:  # catches NaN as well
            diverged_at = t
            warnings.warn(f"simulation diverged at step {t}", RuntimeWarning)
            xs, ys, ps, u = xs[: t + 1], ys[: t + 1], ps[: t + 1], u[: t + 1]
            break
    return Trajectory(t_step=t_step, u=u, p=ps, x=xs, y=ys, label=label,
                      diverged_at=diverged_at)


def markov_coefficient(model, p_window, lag):
    """Impulse-response coefficient ``h_lag`` along a frozen scheduling window.

    ``p_window`` lists ``p(t-lag), ..., p(t)``; lag 0 returns ``D(p(t))``
    and lag m returns ``C(p(t)) A(p(t-1)) ... A(p(t-m+1)) B(p(t-m))``.
    """
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    window = [np.asarray(p, dtype=float).ravel() for p in p_window]
    if len(window) != lag + 1:
        raise ValueError(f"window must list {lag + 1} scheduling vectors, got {len(window)}")
    if lag == 0:
        return eval_matrices(model, window[0])[3]
    out = model.c @ model.extend_scheduling(window[-1])
    for k in range(1, lag):
        out = out @ (model.a @ model.extend_scheduling(window[-1 - k]))
    return out @ (model.b @ model.extend_scheduling(window[0]))


def param_count(model):
    """Total scalar count of the four coefficient tensors."""
    return int(model.a.size + model.b.size + model.c.size + model.d.size)
