"""Compiled fixed-step RK4 loops for the three platoon models.

State layouts:
  CLOSED     y = [s_2..s_n, v_1..v_n]
  DISTURBED  y = [s_2..s_n, v_2..v_n], leader speed v* + alpha*sin(omega_bar*t)
  FTL        same layout as DISTURBED, Follow-the-Leader follower law
"""
import math

import numpy as np
from numba import njit

CLOSED, DISTURBED, FTL = 0, 1, 2

# parameter vector slots
MU, VSTAR, VMAX, CAPL, LAM, EPS, POT, PHIC, RHOBAR, RHOMAX, M1 = range(11)
ALPHA, OMBAR, FA, FK, FB, FZETA, FGMAX, SPEED_TOL = range(11, 19)
NPARAM = 19


def pack(mu, v_star, v_max, cap_L, lam, epsilon, pot=None, alpha=0.0, omega_bar=1.0,
         ftl=None, speed_tol=1e-9):
    p = np.zeros(NPARAM)
    p[MU], p[VSTAR], p[VMAX], p[CAPL], p[LAM], p[EPS] = mu, v_star, v_max, cap_L, lam, epsilon
    pot = pot or {"pot_kind": 0.0}
    p[POT] = pot["pot_kind"]
    if p[POT] == 1.0:
        p[PHIC], p[RHOBAR], p[RHOMAX], p[M1] = pot["phi_scale"], pot["rho_bar"], pot["rho_max"], pot["m1"]
    p[ALPHA], p[OMBAR] = alpha, omega_bar
    if ftl is not None:
        p[FA], p[FK], p[FB], p[FZETA], p[FGMAX] = ftl
    p[SPEED_TOL] = speed_tol
    return p


@njit(cache=True)
def _phi_grad(q, p):
    rb, rm = p[RHOBAR], p[RHOMAX]
    if q <= rb:
        return 0.0
    if q >= rm:
        return math.nan
    u = q - rb
    w = rm - q
    return p[PHIC] * (4.0 * u**3 / w + u**4 / (w * w))


@njit(cache=True)
def _vprime(s, p):
    L, lam = p[CAPL], p[LAM]
    if not s > L:
        return math.nan
    if s >= lam:
        return 0.0
    if p[POT] == 0.0:
        u = lam - s
        w = s - L
        return -3.0 * u * u / w - u**3 / (w * w)
    q = p[M1] / s
    return -_phi_grad(q, p) * q / s


@njit(cache=True)
def _soft(x, e):
    if x <= -e:
        return 0.0
    if x < 0.0:
        return (x + e) ** 2 / (2.0 * e)
    return (e * e + 2.0 * e * x) / (2.0 * e)


@njit(cache=True)
def _gain(z, p):
    vs, vm = p[VSTAR], p[VMAX]
    return vm * _soft(z, p[EPS]) / (vs * (vm - vs)) - z / vs


@njit(cache=True)
def _gbar(r, p):
    b, gm, zeta = p[FB], p[FGMAX], p[FZETA]
    if r <= b:
        return 0.0
    if r <= gm + b:
        return r - b
    if r <= zeta:
        return gm
    return gm * math.exp(zeta - r)


@njit(cache=True)
def _G(s, p):
    b, gm, zeta = p[FB], p[FGMAX], p[FZETA]
    if s <= b:
        return 0.0
    if s <= gm + b:
        return 0.5 * (s - b) ** 2
    if s <= zeta:
        return 0.5 * gm * gm + gm * (s - b - gm)
    return 0.5 * gm * gm + gm * (zeta - b - gm) + gm * (1.0 - math.exp(zeta - s))


@njit(cache=True)
def _bidir_speeds(s_all, v_all, p, dv, first):
    # s_all[j] = s_{j+2}, v_all[j] = v_{j+1}; writes dv for vehicles first+1..n
    n = v_all.size
    vs = p[VSTAR]
    for j in range(first, n):
        z = 0.0
        if j >= 1:
            z += _vprime(s_all[j - 1], p)
        if j <= n - 2:
            z -= _vprime(s_all[j], p)
        k = p[MU] + _gain(z, p)
        dv[j - first] = -k * (v_all[j] - vs) + z


@njit(cache=True)
def rhs(model, t, y, p, n):
    out = np.empty_like(y)
    m = n - 1
    s = y[:m]
    if model == CLOSED:
        v = y[m:]
        for j in range(m):
            out[j] = v[j] - v[j + 1]
        _bidir_speeds(s, v, p, out[m:], 0)
        return out
    lead = p[VSTAR] + p[ALPHA] * math.sin(p[OMBAR] * t)
    v_all = np.empty(n)
    v_all[0] = lead
    v_all[1:] = y[m:]
    for j in range(m):
        out[j] = v_all[j] - v_all[j + 1]
    if model == DISTURBED:
        _bidir_speeds(s, v_all, p, out[m:], 1)
    else:
        k = p[FK]
        for j in range(1, n):
            sj = s[j - 1]
            gb = _gbar(sj, p)
            out[m + j - 1] = (k - gb) * _G(sj, p) + gb * v_all[j - 1] - k * v_all[j]
    return out


@njit(cache=True)
def inside(model, y, p, n):
    m = n - 1
    for j in range(y.size):
        if not math.isfinite(y[j]):
            return False
    floor = 0.0 if model == FTL else p[CAPL]
    for j in range(m):
        if not y[j] > floor:
            return False
    if model != FTL:
        tol = p[SPEED_TOL]
        for j in range(m, y.size):
            if y[j] < -tol or y[j] > p[VMAX] + tol:
                return False
    return True


@njit(cache=True)
def rk4_step(model, t, y, h, p, n):
    k1 = rhs(model, t, y, p, n)
    k2 = rhs(model, t + 0.5 * h, y + 0.5 * h * k1, p, n)
    k3 = rhs(model, t + 0.5 * h, y + 0.5 * h * k2, p, n)
    k4 = rhs(model, t + h, y + h * k3, p, n)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def rk4_run(model, y0, t0, dt, nsteps, stride, p, n, max_halvings):
    """Returns (snapshots, steps completed, deepest halving used, failed flag)."""
    nrec = nsteps // stride + 1
    out = np.empty((nrec, y0.size))
    out[0] = y0
    y = y0.copy()
    rec = 1
    deepest = 0
    for step in range(nsteps):
        t = t0 + step * dt
        accepted = False
        z = y
        for k in range(max_halvings + 1):
            sub = 1 << k
            h = dt / sub
            z = y
            good = True
            for j in range(sub):
                z = rk4_step(model, t + j * h, z, h, p, n)
                if not inside(model, z, p, n):
                    good = False
                    break
            if good:
                accepted = True
                if k > deepest:
                    deepest = k
                break
        if not accepted:
            return out[:rec], step, deepest, True
        y = z
        if (step + 1) % stride == 0:
            out[rec] = y
            rec += 1
    return out[:rec], nsteps, deepest, False
