"""Exact solution of the small-density continuum model by characteristics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._numerics import bisect_monotone, newton_polish
from ..errors import PreconditionError, ProfileBoundError
from .params import MacroParams
from .profiles import SmoothProfile

XTOL = 1e-12


def _require_admissible(rho0: SmoothProfile | None, v0: SmoothProfile, omega: float):
    if not v0.d1_inf > -omega:
        raise PreconditionError(f"inf v0' = {v0.d1_inf} must exceed -omega = {-omega}")
    if v0.d2 is None:
        raise PreconditionError("speed profile needs a second derivative")
    if rho0 is not None and not (rho0.inf_value is not None and rho0.inf_value > 0):
        raise PreconditionError("density profile must be positive (declare inf_value > 0)")


def p_forward(t, r, v0: SmoothProfile, omega: float):
    """``omega r + (1 - exp(-omega t)) v0(r)``; ``t = inf`` gives the limiting map."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise PreconditionError("t >= 0 required")
    _require_admissible(None, v0, omega)
    w = -np.expm1(-omega * t)
    return omega * np.asarray(r, dtype=float) + w * v0(r)


def p_invert(t, y, v0: SmoothProfile, omega: float):
    """Unique ``r`` with ``p_forward(t, r) = y`` (bisection, then Newton polish)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise PreconditionError("t >= 0 required")
    _require_admissible(None, v0, omega)
    y = np.asarray(y, dtype=float)
    t, y = np.broadcast_arrays(t, y)
    w = -np.expm1(-omega * t)
    S = v0.sup_abs
    lo, hi = (y - S) / omega, (y + S) / omega

    def P(r):
        return omega * r + w * v0(r)

    # the bracket is sound only if the declared sup|v0| is
    if np.any(P(lo) > y) or np.any(P(hi) < y):
        raise ProfileBoundError("inversion bracket failed; declared sup|v0| is wrong")
    x, lo, hi = bisect_monotone(P, y, lo, hi, xtol=XTOL)
    return newton_polish(P, lambda r: omega + w * v0.deriv(r), y, x, lo, hi)


def characteristic_state(t, x, rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams):
    """Density and speed at ``(t, x)``; ``t`` and ``x`` broadcast against each other."""
    _require_admissible(rho0, v0, params.omega)
    om, vs = params.omega, params.v_star
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    decay = np.exp(-om * t)
    w = -np.expm1(-om * t)
    xi = p_invert(t, om * (x - vs * t) + vs * w, v0, om)
    rho = om * rho0(xi) / (om + w * v0.deriv(xi))
    v = vs + decay * (v0(xi) - vs)
    return rho, v


def traveling_wave(x, rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams):
    """Limiting density profile ``f``; ``rho(t, x) - f(x - v* t)`` decays like ``exp(-omega t)``."""
    _require_admissible(rho0, v0, params.omega)
    om = params.omega
    zeta = p_invert(np.inf, om * np.asarray(x, dtype=float) + params.v_star, v0, om)
    return om * rho0(zeta) / (om + v0.deriv(zeta))


@dataclass(frozen=True)
class WaveConstants:
    gamma: float
    K: float
    c: float
    L: float
    bound: float


def wave_gap_constant(rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams) -> WaveConstants:
    """Explicit bound on ``sup exp(omega t) |rho(t, x) - f(x - v* t)|`` from the declared profile bounds."""
    _require_admissible(rho0, v0, params.omega)
    om = params.omega
    gamma = om + v0.d1_inf
    K = rho0.sup_value + v0.sup_abs
    c = rho0.d1_sup_abs + v0.d2_sup_abs
    L = v0.d1_sup_abs
    m = min(gamma, om)
    bound = om / (gamma * m) * (c * (K + params.v_star) * (1 + K / m) + L * K)
    return WaveConstants(gamma, K, c, L, bound)


@dataclass
class DecayReport:
    times: np.ndarray
    density_cap: np.ndarray          # right side of the sup-density estimate, per time
    density_max: np.ndarray
    speed_cap: np.ndarray
    speed_dev: np.ndarray
    density_min: np.ndarray
    wave_gap: np.ndarray             # max_x exp(omega t)|rho - f(x - v* t)| per time
    wave_bound: float
    small_density: bool              # premise on slope and peak density
    density_below_onset: bool | None # conclusion, None when the premise is unmet
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def decay_audit(rho0: SmoothProfile, v0: SmoothProfile, params: MacroParams, times, x,
                field=None, speed_rtol=1e-9, rtol=1e-12) -> DecayReport:
    """Check the density, speed, positivity and traveling-wave estimates on a (t, x) grid.

    ``field`` may supply ``(rho, v)`` arrays of shape ``(len(times), len(x))``
    (for instance from the finite-difference solver); by default the exact
    characteristics solution is audited.
    """
    _require_admissible(rho0, v0, params.omega)
    om, vs = params.omega, params.v_star
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    if field is None:
        rho, v = characteristic_state(times[:, None], x[None, :], rho0, v0, params)
    else:
        rho, v = (np.asarray(a, dtype=float) for a in field)
    w = -np.expm1(-om * times)
    dens_cap = om * rho0.sup_value / (om + w * v0.d1_inf)
    spd_cap = np.exp(-om * times) * v0.sup_dev
    dens_max, dens_min = rho.max(axis=1), rho.min(axis=1)
    spd_dev = np.abs(v - vs).max(axis=1)
    f = traveling_wave(x[None, :] - vs * times[:, None], rho0, v0, params)
    gap = (np.exp(om * times) * np.abs(rho - f).max(axis=1))
    wc = wave_gap_constant(rho0, v0, params)

    viol = []
    for k, t in enumerate(times):
        if dens_max[k] > dens_cap[k] * (1 + rtol):
            viol.append(("density_bound", float(t), float(dens_max[k] - dens_cap[k])))
        if spd_dev[k] > spd_cap[k] * (1 + speed_rtol):
            viol.append(("speed_decay", float(t), float(spd_dev[k] - spd_cap[k])))
        if not dens_min[k] > 0:
            viol.append(("positivity", float(t), float(dens_min[k])))
        if gap[k] > wc.bound:
            viol.append(("wave_gap", float(t), float(gap[k] - wc.bound)))

    small = bool(v0.d1_inf > -om
                 and rho0.sup_value <= params.rho_bar * (1 + min(0.0, v0.d1_inf) / om))
    below = None
    if small:
        below = bool(np.all(dens_max <= params.rho_bar * (1 + rtol)))
        if not below:
            viol.append(("onset_density", float(times[np.argmax(dens_max)]), float(dens_max.max())))
    return DecayReport(times, dens_cap, dens_max, spd_cap, spd_dev, dens_min, gap, wc.bound,
                       small, below, viol)
