"""First-order upwind solver for the full continuum model with the Xi term."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, SolverBlowupError
from ..micro import write_csv
from .params import MacroParams
from .profiles import SmoothProfile

MAX_CFL = 0.9
MASS_RTOL = 1e-10
SOURCE_CAP = 0.5


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -2.0
    x_max: float = 8.0
    dx: float = 1e-2
    cfl: float = 0.9
    times: tuple = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    boundary: str = "inflow"     # or "periodic"

    def __post_init__(self):
        errs = []
        if not self.x_max > self.x_min:
            errs.append("x_max > x_min")
        if not self.dx > 0:
            errs.append("dx > 0")
        if not 0 < self.cfl <= MAX_CFL:
            errs.append(f"0 < cfl <= {MAX_CFL} (got {self.cfl})")
        if len(self.times) == 0 or any(t < 0 for t in self.times) or list(self.times) != sorted(self.times):
            errs.append("times non-negative and sorted")
        if self.boundary not in ("inflow", "periodic"):
            errs.append("boundary in {inflow, periodic}")
        if errs:
            raise ConfigError(errs)

    def nodes(self) -> np.ndarray:
        m = int(round((self.x_max - self.x_min) / self.dx))
        if abs(m * self.dx - (self.x_max - self.x_min)) > 1e-9 * (self.x_max - self.x_min):
            raise ConfigError(["(x_max - x_min) must be a multiple of dx"])
        x = self.x_min + self.dx * np.arange(m + 1)
        # periodic grids drop the duplicated right end
        return x[:-1] if self.boundary == "periodic" else x


@dataclass
class MacroField:
    x: np.ndarray
    times: np.ndarray
    rho: np.ndarray      # (len(times), len(x))
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def slice_to_csv(self, k: int, path):
        write_csv(path, ["x", "rho", "v"], np.column_stack([self.x, self.rho[k], self.v[k]]))

    def write_slices(self, directory, stem="field"):
        paths = []
        for k in range(self.times.size):
            p = os.path.join(directory, f"{stem}_t{k:03d}.csv")
            self.slice_to_csv(k, p)
            paths.append(p)
        return paths


def sound_speed(rho, params: MacroParams):
    """``sqrt(d(rho**2 Phi')/d rho)``; zero where the density is below the onset."""
    phi = params.phi
    return np.sqrt(rho * (2.0 * phi.grad(rho) + rho * phi.hess(rho)))


def _xi(rho, dx, periodic, params):
    if periodic:
        rx = (np.roll(rho, -1) - np.roll(rho, 1)) / (2 * dx)
    else:
        rx = np.gradient(rho, dx)
    phi = params.phi
    return -rx * (2.0 * phi.grad(rho) + rho * phi.hess(rho))


def _acoustic_div(u, c, periodic, u_in):
    """Divergence of the dissipative flux ``-a/2 (u_{j+1} - u_j)`` with ``a = max(c_j, c_{j+1})``."""
    if periodic:
        a = np.maximum(c, np.roll(c, -1))
        d = -0.5 * a * (np.roll(u, -1) - u)
        return d - np.roll(d, 1)
    # interfaces -1/2 .. M+1/2; ghost states equal the inflow state on the left and copy on the right
    ue = np.concatenate([[u_in], u, [u[-1]]])
    ce = np.concatenate([[0.0], c, [c[-1]]])
    a = np.maximum(ce[:-1], ce[1:])
    d = -0.5 * a * (ue[1:] - ue[:-1])
    return d[1:] - d[:-1]


def fd_solver(rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams,
              grid: GridConfig = GridConfig()) -> MacroField:
    """Donor-cell continuity flux plus upwind speed advection and explicit source terms.

    Speeds stay in ``[0, v_max]`` so the upwind side is always the left
    neighbour.  Where the density exceeds ``rho_bar`` the pressure waves
    travel at ``v +- c`` and a first-order dissipation ``c dx / 2`` is added
    to both equations; the step then obeys the CFL bound on ``v + c``.
    With ``boundary="inflow"`` the left ghost node keeps the initial
    far-field state and the right end is a free outflow.
    """
    x = grid.nodes()
    dx = grid.dx
    periodic = grid.boundary == "periodic"
    rho = rho0(x).astype(float)
    v = v0(x).astype(float)
    rho_in, v_in = float(rho0(np.array(grid.x_min - dx))), float(v0(np.array(grid.x_min - dx)))
    vs, mu = params.v_star, params.mu_eff

    def check(t):
        if not (np.all(rho > 0) and np.all(rho < params.rho_max)):
            raise SolverBlowupError(f"density left (0, rho_max) at t = {t:.6g}")
        if not (np.all(v >= 0) and np.all(v <= params.v_max)):
            raise SolverBlowupError(f"speed left [0, v_max] at t = {t:.6g}")

    check(0.0)
    out_rho, out_v = [], []
    t, steps, worst_mass, max_xi = 0.0, 0, 0.0, 0.0
    for t_out in grid.times:
        while t < t_out:
            c = sound_speed(rho, params)
            vmax = float((v + c).max())
            xi = _xi(rho, dx, periodic, params)
            gain = mu + params.gain_g(xi)
            # transport CFL, plus a cap keeping the explicit relaxation step non-oscillatory
            dt = min(grid.cfl * dx / max(vmax, 1e-12), SOURCE_CAP / max(float(gain.max()), 1e-12))
            if t + dt >= t_out * (1 - 1e-14):
                dt = t_out - t
            flux = rho * v
            if periodic:
                inflow = np.roll(flux, 1)
                v_up = np.roll(v, 1)
            else:
                inflow = np.concatenate([[rho_in * v_in], flux[:-1]])
                v_up = np.concatenate([[v_in], v[:-1]])
            max_xi = max(max_xi, float(np.abs(xi).max()))
            mass = rho.sum() * dx
            boundary_net = 0.0 if periodic else (rho_in * v_in - flux[-1])
            if not periodic and c.max() > 0:
                # the dissipative flux only crosses the left boundary (the right ghost copies)
                boundary_net += 0.5 * c[0] * (rho[0] - rho_in)
            rho_new = rho - dt / dx * (flux - inflow)
            v_new = v - dt / dx * v * (v - v_up) + dt * (xi - gain * (v - vs))
            if c.max() > 0:
                # Rusanov-type dissipation for the pressure waves; vanishes below the onset density
                rho_new -= dt / dx * _acoustic_div(rho, c, periodic, rho_in)
                v_new -= dt / dx * _acoustic_div(v, c, periodic, v_in)
            v = v_new
            rho = rho_new
            resid = abs(rho.sum() * dx - mass - dt * boundary_net) / mass
            worst_mass = max(worst_mass, resid)
            if resid > MASS_RTOL:
                raise SolverBlowupError(f"mass balance broken at t = {t:.6g} (residual {resid:.3g})")
            t = t_out if dt == t_out - t else t + dt
            steps += 1
            check(t)
        out_rho.append(rho.copy())
        out_v.append(v.copy())
    return MacroField(x, np.asarray(grid.times, float), np.array(out_rho), np.array(out_v),
                      meta={"steps": steps, "max_mass_residual": worst_mass, "max_xi": max_xi})
