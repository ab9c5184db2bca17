"""Leader-disturbed platoons: bidirectional model, Follow-the-Leader baseline, amplification sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._numerics import bisect_monotone
from .core import ModelParams, gain_g, platoon_params
from .errors import ParameterError, PreconditionError
from .micro import (SPEED_SLACK, IntegratorConfig, Trajectory, _kernel_params, run_model,
                    write_csv)


@dataclass(frozen=True)
class DisturbanceSpec:
    """Leader speed deviation ``alpha * sin(omega_bar * t)``."""

    alpha: float
    omega_bar: float

    def __post_init__(self):
        if not self.omega_bar > 0:
            raise ParameterError("omega_bar > 0 violated")

    def check(self, params: ModelParams):
        if not -params.v_star <= self.alpha <= params.v_max - params.v_star:
            raise PreconditionError(
                f"alpha = {self.alpha} outside [-v*, v_max - v*] = "
                f"[{-params.v_star}, {params.v_max - params.v_star}]")

    def __call__(self, t):
        return self.alpha * np.sin(self.omega_bar * np.asarray(t, dtype=float))

    @property
    def sup_norm(self) -> float:
        return abs(self.alpha)


@dataclass(frozen=True)
class FtLParams:
    """Follow-the-Leader gains; ``b`` is the ramp offset and defaults to ``beta_ftl``."""

    a: float = 5.1
    k: float = 1.2
    beta_ftl: float = 34.4
    zeta: float = 64.43
    g_max: float = 1.15
    b: float | None = None

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", self.beta_ftl)
        problems = []
        if not self.beta_ftl > self.a > 0:
            problems.append("beta_ftl > a > 0")
        if not self.k > self.g_max > 0:
            problems.append("k > g_max > 0")
        if not self.zeta > self.g_max + self.b:
            problems.append("zeta > g_max + b")
        if problems:
            raise ParameterError("violated: " + ", ".join(problems))

    def packed(self):
        return (self.a, self.k, self.b, self.zeta, self.g_max)


def ftl_gbar(r, ftl: FtLParams):
    r = np.asarray(r, dtype=float)
    b, gm, z = ftl.b, ftl.g_max, ftl.zeta
    with np.errstate(over="ignore"):
        tail = gm * np.exp(z - np.maximum(r, z))
    return np.where(r <= b, 0.0, np.where(r <= gm + b, r - b, np.where(r <= z, gm, tail)))


def ftl_G(s, ftl: FtLParams):
    """Integral of ``ftl_gbar`` from ``a``, piecewise exact."""
    s = np.asarray(s, dtype=float)
    b, gm, z = ftl.b, ftl.g_max, ftl.zeta
    ramp = 0.5 * gm * gm
    at_zeta = ramp + gm * (z - b - gm)
    return np.where(s <= b, 0.0,
                    np.where(s <= gm + b, 0.5 * (s - b) ** 2,
                             np.where(s <= z, ramp + gm * (s - b - gm),
                                      at_zeta + gm * (1.0 - np.exp(z - np.maximum(s, z))))))


def ftl_G_inverse(speed, ftl: FtLParams):
    """Spacing at which the FtL equilibrium speed equals ``speed``."""
    top = float(ftl_G(np.inf, ftl))
    if not 0 < speed < top:
        raise PreconditionError(f"speed {speed} not in (0, {top}) = range of G")
    hi = ftl.zeta + 1.0
    while ftl_G(hi, ftl) < speed:
        hi = ftl.zeta + 2.0 * (hi - ftl.zeta)
    x, _, _ = bisect_monotone(lambda s: ftl_G(s, ftl), np.float64(speed), ftl.b, hi, xtol=1e-13)
    return float(x)


def measurement_horizon(omega_bar: float) -> float:
    return max(400.0, 20.0 * 2.0 * math.pi / omega_bar)


def default_config(omega_bar: float, dt: float = 1e-3, record_stride: int = 10,
                   horizon: float | None = None) -> IntegratorConfig:
    T = measurement_horizon(omega_bar) if horizon is None else horizon
    chunk = dt * record_stride
    return IntegratorConfig(dt, math.ceil(T / chunk - 1e-9) * chunk, record_stride)


def _leader_rhs_py(model, params, spec, ftl=None):
    n, vs = params.n, params.v_star
    pot = params.potential

    def rhs(t, y):
        s = y[: n - 1]
        v = np.concatenate([[vs + spec.alpha * math.sin(spec.omega_bar * t)], y[n - 1:]])
        out = np.empty_like(y)
        out[: n - 1] = v[:-1] - v[1:]
        if model == K.DISTURBED:
            if np.any(~(s > params.cap_L)):
                return np.full_like(y, np.nan)
            dVp = np.pad(pot.grad(s), (1, 1))
            z = (dVp[:-1] - dVp[1:])[1:]
            k = params.mu + gain_g(z, params)
            out[n - 1:] = -k * (v[1:] - vs) + z
        else:
            gb = ftl_gbar(s, ftl)
            out[n - 1:] = (ftl.k - gb) * ftl_G(s, ftl) + gb * v[:-1] - ftl.k * v[1:]
        return out

    def inside(y):
        if not np.all(np.isfinite(y)):
            return False
        s, v = y[: n - 1], y[n - 1:]
        if model == K.FTL:
            return bool(np.all(s > 0))
        return bool(np.all(s > params.cap_L) and np.all(v >= -SPEED_SLACK)
                    and np.all(v <= params.v_max + SPEED_SLACK))

    return rhs, inside


def _leader_run(model, params, spec, config, s0, v0, ftl=None, backend="auto"):
    n = params.n
    p = _kernel_params(params, alpha=spec.alpha, omega_bar=spec.omega_bar,
                       ftl=ftl.packed() if ftl is not None else None)
    y0 = np.concatenate([np.full(n - 1, s0), np.full(n - 1, v0)])
    t, snaps, deepest = run_model(model, y0, params, config, p=p,
                                  rhs_py=_leader_rhs_py(model, params, spec, ftl), backend=backend)
    lead = params.v_star + spec(t)
    v = np.column_stack([lead, snaps[:, n - 1:]])
    return t, snaps[:, : n - 1], v, deepest


def simulate_disturbed_inviscid(params: ModelParams, spec: DisturbanceSpec,
                                config: IntegratorConfig | None = None, backend="auto") -> Trajectory:
    """Bidirectional platoon started at ``s_i = lam``, ``v_i = v*`` with a sinusoidal leader.

    The leader speed is prescribed, so column ``v1`` of the result is
    ``v* + d(t)`` rather than an integrated quantity.
    """
    spec.check(params)
    config = config or default_config(spec.omega_bar)
    t, s, v, deepest = _leader_run(K.DISTURBED, params, spec, config, params.lam, params.v_star,
                                   backend=backend)
    return Trajectory(t, s, v, params, meta={"model": "inviscid", "deepest_halving": int(deepest),
                                             "alpha": spec.alpha, "omega_bar": spec.omega_bar})


def simulate_ftl(ftl: FtLParams, params: ModelParams, spec: DisturbanceSpec,
                 config: IntegratorConfig | None = None, init: str = "lambda",
                 backend="auto") -> Trajectory:
    """Follow-the-Leader platoon under the same leader disturbance.

    ``init="lambda"`` starts at ``s_i = lam`` like the bidirectional run;
    ``init="equilibrium"`` starts at the FtL equilibrium spacing ``G^-1(v*)``.
    """
    spec.check(params)
    config = config or default_config(spec.omega_bar)
    if init == "lambda":
        s0 = params.lam
    elif init == "equilibrium":
        s0 = ftl_G_inverse(params.v_star, ftl)
    else:
        raise ValueError(f"unknown FtL init {init!r}")
    t, s, v, deepest = _leader_run(K.FTL, params, spec, config, s0, params.v_star, ftl=ftl,
                                   backend=backend)
    return Trajectory(t, s, v, params, meta={"model": "ftl", "deepest_halving": int(deepest),
                                             "alpha": spec.alpha, "omega_bar": spec.omega_bar})


@dataclass
class AmplificationReport:
    model: str
    n: int
    omega_bar: float
    alpha: float
    gamma: np.ndarray   # vehicles 2..n
    delta: np.ndarray   # vehicles 2..n
    horizon: float

    @property
    def gamma_last(self) -> float:
        return float(self.gamma[-1])

    @property
    def delta_last(self) -> float:
        return float(self.delta[-1])

    def rows(self):
        for j, (g, d) in enumerate(zip(self.gamma, self.delta)):
            yield (self.model, self.n, self.omega_bar, self.alpha, j + 2, g, d)


def amplification_factors(traj: Trajectory, params: ModelParams, spec: DisturbanceSpec) -> AmplificationReport:
    """Sup-norm speed and spacing-force responses of followers relative to ``|alpha|``."""
    if spec.alpha == 0:
        raise PreconditionError("alpha = 0: amplification ratio undefined")
    d = spec.sup_norm
    gamma = np.max(np.abs(traj.v[:, 1:] - params.v_star), axis=0) / d
    delta = np.max(np.abs(params.potential.grad(traj.s)), axis=0) / d
    return AmplificationReport(traj.meta.get("model", "?"), params.n, spec.omega_bar, spec.alpha,
                               gamma, delta, float(traj.t[-1] - traj.t[0]))


MODELS = ("inviscid", "ftl")


@dataclass(frozen=True)
class SweepGrid:
    omega_bars: tuple
    ns: tuple
    models: tuple = MODELS
    alpha: float = -2.5

    def cells(self):
        return [(m, n, w) for w in self.omega_bars for n in self.ns for m in self.models]


@dataclass
class SweepResult:
    reports: list                      # AmplificationReport per successful cell, grid order
    failures: list = field(default_factory=list)   # (cell, message)

    def rows(self):
        for r in self.reports:
            yield from r.rows()

    def summary(self):
        return [(r.model, r.n, r.omega_bar, r.gamma_last, r.delta_last) for r in self.reports]

    def lookup(self, model, n, omega_bar) -> AmplificationReport:
        for r in self.reports:
            if r.model == model and r.n == n and r.omega_bar == omega_bar:
                return r
        raise KeyError((model, n, omega_bar))

    def to_csv(self, path):
        write_csv(path, ["model", "n", "omega_bar", "alpha", "i", "gamma", "delta"], self.rows())

    def summary_to_csv(self, path):
        write_csv(path, ["model", "n", "omega_bar", "gamma_nn", "delta_nn"], self.summary())


def run_cell(model, n, omega_bar, alpha, params=None, ftl=None, dt=1e-3, record_stride=10,
             horizon=None, ftl_init="lambda") -> AmplificationReport:
    params = (params or platoon_params(n)).replace(n=n)
    spec = DisturbanceSpec(alpha, omega_bar)
    config = default_config(omega_bar, dt, record_stride, horizon)
    if model == "inviscid":
        traj = simulate_disturbed_inviscid(params, spec, config)
    elif model == "ftl":
        traj = simulate_ftl(ftl or FtLParams(), params, spec, config, init=ftl_init)
    else:
        raise ValueError(f"unknown model {model!r}")
    return amplification_factors(traj, params, spec)


def _cell_job(args):
    cell, kw = args
    try:
        return cell, run_cell(*cell, **kw), None
    except Exception as exc:  # a failed cell must not abort the sweep
        return cell, None, f"{type(exc).__name__}: {exc}"


def sweep(grid: SweepGrid, params: ModelParams | None = None, ftl: FtLParams | None = None,
          dt: float = 1e-3, record_stride: int = 10, horizon: float | None = None,
          ftl_init: str = "lambda", max_workers: int = 1) -> SweepResult:
    """Run every (model, n, omega_bar) cell; results come back in grid order."""
    kw = dict(params=params, ftl=ftl, dt=dt, record_stride=record_stride, horizon=horizon,
              ftl_init=ftl_init)
    jobs = [((m, n, w, grid.alpha), kw) for (m, n, w) in grid.cells()]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as ex:
            out = list(ex.map(_cell_job, jobs))
    else:
        out = [_cell_job(j) for j in jobs]
    result = SweepResult([])
    for cell, rep, err in out:
        if err is None:
            result.reports.append(rep)
        else:
            result.failures.append((cell, err))
    return result
