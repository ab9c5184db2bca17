"""Fixed-step integration of the platoon ODE, state-space checks and closed-form oracle."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import MicroState, ModelParams, micro_vector_field, omega_rate
from .errors import DomainError, IntegrationError, ParameterError, PreconditionError

MAX_HALVINGS = 20
SPEED_SLACK = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    horizon: float = 20.0
    record_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0 and int(self.record_stride) >= 1):
            raise ParameterError("need dt > 0, horizon > 0, record_stride >= 1")
        if abs(self.nsteps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ParameterError("horizon must be an integer multiple of dt")
        if self.nsteps % int(self.record_stride):
            raise ParameterError("horizon/dt must be a multiple of record_stride")

    @property
    def nsteps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class Trajectory:
    """Snapshots on a uniform grid ``t[k] = t0 + k * step``."""

    t: np.ndarray
    s: np.ndarray
    v: np.ndarray
    params: ModelParams
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.v.shape[1]

    def __len__(self):
        return self.t.size

    def state(self, k: int) -> MicroState:
        return MicroState(self.s[k], self.v[k])

    @property
    def states(self) -> MicroState:
        """All snapshots as one batched state."""
        return MicroState(self.s, self.v)

    def header(self):
        return (["t"] + [f"s{i}" for i in range(2, self.n + 1)]
                + [f"v{i}" for i in range(1, self.n + 1)])

    def to_csv(self, path):
        write_csv(path, self.header(), np.column_stack([self.t, self.s, self.v]))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def read_csv(path):
    """Return (header, float array) for a numeric CSV written by this package."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(rows[0]))


def read_trajectory_csv(path, params: ModelParams) -> Trajectory:
    header, data = read_csv(path)
    n = (len(header)) // 2
    if header[0] != "t" or len(header) != 2 * n:
        raise ValueError(f"not a trajectory file: {path}")
    return Trajectory(data[:, 0], data[:, 1:n], data[:, n:], params)


@dataclass(frozen=True)
class Membership:
    spacing_ok: bool
    speed_upper_ok: bool
    speed_lower_ok: bool
    bad_spacings: tuple = ()
    bad_speeds: tuple = ()

    @property
    def member(self) -> bool:
        return self.spacing_ok and self.speed_upper_ok and self.speed_lower_ok


def validate_state(state: MicroState, params: ModelParams) -> Membership:
    """Check each defining constraint of the state space separately.

    ``bad_spacings`` holds vehicle indices i (2..n) with s_i <= L and
    ``bad_speeds`` vehicle indices (1..n) with speeds outside [0, v_max].
    """
    s, v = np.asarray(state.s), np.asarray(state.v)
    bad_s = tuple(int(i) + 2 for i in np.flatnonzero(~(s > params.cap_L)))
    hi = ~(v <= params.v_max)
    lo = ~(v >= 0.0)
    bad_v = tuple(int(i) + 1 for i in np.flatnonzero(hi | lo))
    return Membership(not bad_s, not hi.any(), not lo.any(), bad_s, bad_v)


def _require_member(state, params):
    m = validate_state(state, params)
    if not m.member:
        raise DomainError(f"initial state outside Omega (spacings {m.bad_spacings}, speeds {m.bad_speeds})")


def _kernel_params(params: ModelParams, **extra):
    pot = params.potential.kernel_params() if hasattr(params.potential, "kernel_params") else None
    if pot is None:
        return None
    return K.pack(params.mu, params.v_star, params.v_max, params.cap_L, params.lam,
                  params.epsilon, pot=pot, speed_tol=SPEED_SLACK, **extra)


def python_rk4_run(rhs: Callable, inside: Callable, y0, t0, dt, nsteps, stride,
                   max_halvings=MAX_HALVINGS):
    """Pure-numpy twin of the compiled loop; used for generic potentials and as a cross-check."""
    y = np.array(y0, dtype=float)
    out = [y.copy()]
    deepest = 0
    for step in range(nsteps):
        t = t0 + step * dt
        for k in range(max_halvings + 1):
            sub = 1 << k
            h = dt / sub
            z = y
            good = True
            for j in range(sub):
                tj = t + j * h
                k1 = rhs(tj, z)
                k2 = rhs(tj + 0.5 * h, z + 0.5 * h * k1)
                k3 = rhs(tj + 0.5 * h, z + 0.5 * h * k2)
                k4 = rhs(tj + h, z + h * k3)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not inside(z):
                    good = False
                    break
            if good:
                deepest = max(deepest, k)
                break
        else:
            return np.array(out), step, deepest, True
        y = z
        if (step + 1) % stride == 0:
            out.append(y.copy())
    return np.array(out), nsteps, deepest, False


def _closed_rhs_py(params):
    n = params.n

    def rhs(t, y):
        with np.errstate(all="ignore"):
            try:
                d = micro_vector_field(MicroState.from_flat(y, n), params, check=False)
            except DomainError:
                return np.full_like(y, np.nan)
        return d.flat()

    def inside(y):
        s, v = y[: n - 1], y[n - 1:]
        return bool(np.all(np.isfinite(y)) and np.all(s > params.cap_L)
                    and np.all(v >= -SPEED_SLACK) and np.all(v <= params.v_max + SPEED_SLACK))

    return rhs, inside


def run_model(model, y0, params, config, p=None, rhs_py=None, t0=0.0, backend="auto"):
    """Dispatch one fixed-step run to the compiled loop or the numpy twin."""
    use_kernel = backend == "kernel" or (backend == "auto" and p is not None)
    if use_kernel:
        if p is None:
            raise ValueError("potential has no compiled form; use backend='python'")
        snaps, done, deepest, failed = K.rk4_run(model, np.asarray(y0, float), float(t0), config.dt,
                                                 config.nsteps, int(config.record_stride), p,
                                                 params.n, MAX_HALVINGS)
    else:
        rhs, inside = rhs_py
        snaps, done, deepest, failed = python_rk4_run(rhs, inside, y0, t0, config.dt, config.nsteps,
                                                      int(config.record_stride))
    if failed:
        raise IntegrationError(
            f"step {done} (t={t0 + done * config.dt:.6g}) left the state space after "
            f"{MAX_HALVINGS} halvings; dt={config.dt} is far too large")
    step = config.dt * config.record_stride
    t = t0 + step * np.arange(snaps.shape[0])
    return t, snaps, deepest


def integrate(initial: MicroState, params: ModelParams, config: IntegratorConfig = IntegratorConfig(),
              backend: str = "auto") -> Trajectory:
    """Classical RK4 on a fixed grid; steps leaving Omega are retried with halved substeps."""
    if initial.n != params.n:
        raise ValueError(f"state has {initial.n} vehicles, params say {params.n}")
    _require_member(initial, params)
    p = _kernel_params(params)
    t, snaps, deepest = run_model(K.CLOSED, initial.flat(), params, config, p=p,
                                  rhs_py=_closed_rhs_py(params), backend=backend)
    n = params.n
    return Trajectory(t, snaps[:, : n - 1], snaps[:, n - 1:], params,
                      meta={"model": "inviscid", "deepest_halving": int(deepest)})


def closed_form_solution(initial: MicroState, params: ModelParams, t):
    """Exact solution for well-separated platoons (no interaction ever switches on).

    ``t`` may be a scalar or an array; an array yields batched states.
    """
    w = omega_rate(params)
    s0, v0 = initial.s, initial.v
    dv = v0[:-1] - v0[1:]
    need = np.maximum(params.lam - dv / w, params.lam)
    bad = np.flatnonzero(s0 < need)
    if bad.size:
        i = int(bad[0]) + 2
        raise PreconditionError(f"s_{i}(0) = {s0[bad[0]]} < {need[bad[0]]}: closed form does not apply")
    t = np.asarray(t, dtype=float)
    decay = np.exp(-w * t)[..., None]
    v = params.v_star + decay * (v0 - params.v_star)
    s = s0 + (dv / w) * (1.0 - decay)
    return MicroState(s, v)


def dist_to_S(state: MicroState, params: ModelParams, check: bool = True):
    """Euclidean distance to the equilibrium set (spacings >= lambda, speeds = v*)."""
    if check and (np.any(~(state.s > params.cap_L)) or np.any(~(state.v >= 0))
                  or np.any(~(state.v <= params.v_max))):
        raise DomainError("state outside Omega")
    gap = np.maximum(params.lam - state.s, 0.0)
    return np.sqrt(np.sum(gap**2, axis=-1) + np.sum((state.v - params.v_star) ** 2, axis=-1))


@dataclass(frozen=True)
class SpacingAudit:
    bound: np.ndarray          # per spacing i = 2..n
    max_spacing: np.ndarray
    tightest_margin: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def spacing_bound_audit(traj: Trajectory, params: ModelParams) -> SpacingAudit:
    """Compare every snapshot against ``max(lambda, s_i(0)) + v_max / mu``."""
    bound = np.maximum(params.lam, traj.s[0]) + params.v_max / params.mu
    margin = bound - traj.s
    return SpacingAudit(bound, traj.s.max(axis=0), float(margin.min()), int(np.sum(margin < 0)))


def example1_initial_state(seed: int = 0, n: int = 6, s_range=(16.0, 24.0),
                           v_range=(27.0, 34.0)) -> MicroState:
    """Seeded draw from the intervals of the six-vehicle example."""
    rng = np.random.default_rng(seed)
    return MicroState(rng.uniform(*s_range, n - 1), rng.uniform(*v_range, n))


def compliant_initial_state(params: ModelParams, seed: int = 0, margin: float = 1.0) -> MicroState:
    """Random start satisfying the separation condition of the closed-form solution."""
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.8 * params.v_star, min(1.1 * params.v_star, params.v_max), params.n)
    dv = v[:-1] - v[1:]
    need = np.maximum(params.lam - dv / omega_rate(params), params.lam)
    s = need + rng.uniform(0.0, margin, params.n - 1)
    return MicroState(s, v)
