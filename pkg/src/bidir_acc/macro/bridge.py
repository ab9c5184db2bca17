"""Compare a many-vehicle platoon with the continuum solution built from the same initial data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..core import MicroState, ModelParams, ReciprocalDensityPotential
from ..errors import DomainError, PreconditionError
from ..micro import IntegratorConfig, integrate, validate_state, write_csv
from .characteristics import characteristic_state, decay_audit
from .fd import GridConfig, fd_solver
from .params import MacroParams
from .profiles import SmoothProfile


@dataclass(frozen=True)
class BridgeConfig:
    x_min: float = -2.0           # the platoon initially fills [x_min, x_max]
    x_max: float = 3.0
    times: tuple = (2.0,)
    dt: float = 1e-3
    quad_points: int = 200001     # resolution of the cumulative-mass table
    grid_points: int = 2001       # comparison grid
    fd_dx: float = 1e-3           # only used when the small-density premise fails

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise PreconditionError("x_max > x_min")
        if any(t <= 0 for t in self.times):
            raise PreconditionError("comparison times must be positive")


@dataclass(frozen=True)
class BridgeRow:
    n: int
    time: float
    linf_rho: float
    l1_rho: float
    linf_v: float
    l1_v: float


@dataclass
class BridgeReport:
    rows: list
    macro_route: str      # "characteristics" or "finite-difference"

    def gaps(self, time, key="linf_rho"):
        sel = [r for r in self.rows if r.time == time]
        return [r.n for r in sel], np.array([getattr(r, key) for r in sel])

    def to_csv(self, path):
        write_csv(path, ["n", "time", "linf_rho", "l1_rho", "linf_v", "l1_v"],
                  ((r.n, r.time, r.linf_rho, r.l1_rho, r.linf_v, r.l1_v) for r in self.rows))


def bridge_micro_params(params: MacroParams, m_total: float, n: int) -> ModelParams:
    """Platoon constants whose potential is ``Phi(m1 / s)`` with one mass unit ``m1`` per gap."""
    m1 = m_total / (n - 1)
    pot = ReciprocalDensityPotential(params.phi, m1)
    return ModelParams(mu=params.mu_eff, v_star=params.v_star, v_max=params.v_max,
                       cap_L=pot.cap_L, lam=pot.lam, epsilon=params.epsilon, n=n,
                       potential_override=pot)


def initial_platoon(rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams, n: int,
                    config: BridgeConfig = BridgeConfig()):
    """Vehicle positions at equal mass quantiles of ``rho0`` on the window; leader at the right end.

    Returns ``(x, state, micro_params)`` with ``x[0]`` the leader position.
    """
    if n < 20:
        raise PreconditionError("n >= 20 required")
    xs = np.linspace(config.x_min, config.x_max, config.quad_points)
    # mass measured from the right end, so that vehicle 1 sits at x_max
    cum = cumulative_trapezoid(rho0(xs)[::-1], -xs[::-1], initial=0.0)
    m_total = params.m_total if params.m_total is not None else float(cum[-1])
    if params.m_total is not None and not np.isclose(m_total, cum[-1], rtol=1e-6):
        raise PreconditionError(f"m_total = {m_total} differs from the window mass {cum[-1]}")
    targets = np.linspace(0.0, cum[-1], n)
    x = np.interp(targets, cum, xs[::-1])
    x[0], x[-1] = config.x_max, config.x_min
    mp = bridge_micro_params(params, m_total, n)
    state = MicroState(x[:-1] - x[1:], v0(x))
    m = validate_state(state, mp)
    if not m.member:
        raise DomainError(f"initial platoon outside the state space for n = {n} "
                          f"(spacings {m.bad_spacings}, speeds {m.bad_speeds})")
    return x, state, mp


def micro_macro_bridge(rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams, ns=(50, 100, 200),
                       config: BridgeConfig = BridgeConfig()) -> BridgeReport:
    """L-infinity and L1 gaps between empirical platoon fields and the continuum solution.

    Empirical density ``m1 / s_i`` lives at the gap midpoints and speeds at
    vehicle positions; both are interpolated linearly onto a grid spanning
    the platoon at the comparison time.
    """
    small = decay_audit(rho0, v0, params, np.array([0.0]), np.array([config.x_min])).small_density
    route = "characteristics" if small else "finite-difference"
    rows = []
    for n in ns:
        x0, state, mp = initial_platoon(rho0, v0, params, n, config)
        horizon = max(config.times)
        traj = integrate(state, mp, IntegratorConfig(config.dt, horizon, 1))
        lead = x0[0] + cumulative_trapezoid(traj.v[:, 0], traj.t, initial=0.0)
        m1 = mp.potential.m1
        for T in config.times:
            k = int(round(T / config.dt))
            pos = lead[k] - np.concatenate([[0.0], np.cumsum(traj.s[k])])
            mid = 0.5 * (pos[:-1] + pos[1:])
            dens = m1 / traj.s[k]
            grid = np.linspace(mid[-1], mid[0], config.grid_points)
            rho_mic = np.interp(grid, mid[::-1], dens[::-1])
            v_mic = np.interp(grid, pos[::-1], traj.v[k][::-1])
            if small:
                rho_mac, v_mac = characteristic_state(T, grid, rho0, v0, params)
            else:
                fld = fd_solver(rho0, v0, params, GridConfig(config.x_min - 1.0, config.x_max + horizon * params.v_max + 1.0,
                                                            config.fd_dx, times=(T,)))
                rho_mac = np.interp(grid, fld.x, fld.rho[0])
                v_mac = np.interp(grid, fld.x, fld.v[0])
            dr, dv = np.abs(rho_mic - rho_mac), np.abs(v_mic - v_mac)
            rows.append(BridgeRow(n, float(T), float(dr.max()), float(np.trapezoid(dr, grid)),
                                  float(dv.max()), float(np.trapezoid(dv, grid))))
    return BridgeReport(rows, route)
