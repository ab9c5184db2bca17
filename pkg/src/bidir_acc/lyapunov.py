"""Energy, strict Lyapunov function and trajectory audits for the closed platoon.

The strict function is ``W = R(H) H - sum_{i>=2} 4**i V'(s_i) (v_i - v*)``
with the weight ``R`` assembled from envelope functions of the potential
(``rho = V^-1``, ``b1``, ``b2``, ``h``) and of the gain ``g``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import bisect_monotone, newton_polish
from .core import MicroState, ModelParams, controller_gains, gain_g, micro_vector_field
from .errors import DomainError, ParameterError, PreconditionError, SizeError
from .micro import Trajectory, write_csv

RATIO_GUARD = 1e-30
MAX_N = 250


@dataclass(frozen=True)
class LyapunovConfig:
    beta: float = 1.0
    fd_dt: float = 1e-4
    envelope_samples: int = 4096

    def __post_init__(self):
        if not (self.beta > 0 and self.fd_dt > 0 and self.envelope_samples >= 64):
            raise ParameterError("need beta > 0, fd_dt > 0, envelope_samples >= 64")


def _check_omega(state: MicroState, params: ModelParams):
    if (np.any(~(state.s > params.cap_L)) or np.any(~(state.v >= 0.0))
            or np.any(~(state.v <= params.v_max))):
        raise DomainError("state outside Omega")


def energy_H(state: MicroState, params: ModelParams, check: bool = True):
    """Kinetic energy relative to the set-point plus stored potential energy."""
    if check:
        _check_omega(state, params)
    kin = 0.5 * np.sum((state.v - params.v_star) ** 2, axis=-1)
    return kin + np.sum(params.potential.value(state.s), axis=-1)


def energy_H_rate(state: MicroState, params: ModelParams, check: bool = True):
    k = controller_gains(state, params, check=check)
    return -np.sum(k * (state.v - params.v_star) ** 2, axis=-1)


def v_inverse(r, params: ModelParams):
    """The spacing in ``(L, lam]`` carrying potential energy ``r``.

    Bisection to 1e-12 followed by guarded Newton polishing, so that the
    result is a smooth function of ``r`` at machine precision.
    """
    pot = params.potential
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("v_inverse needs r >= 0")
    x, lo, hi = bisect_monotone(pot.value, r, pot.cap_L, pot.lam, xtol=1e-12, increasing=False)
    x = newton_polish(pot.value, pot.grad, r, x, lo, hi)
    return np.where(r == 0, pot.lam, x)


class CertificateTables:
    """Envelope functions feeding the weight ``R`` and the bound ``kappa``.

    The suprema over ``[q, lam]`` are evaluated directly when the integrand is
    monotone on the sample grid (true for the cubic potential) and by a
    suffix maximum over that grid otherwise.
    """

    def __init__(self, params: ModelParams, config: LyapunovConfig = LyapunovConfig()):
        if params.n > MAX_N:
            raise SizeError(f"n = {params.n} > {MAX_N}: 4**(2n) exhausts double precision")
        self.params = params
        self.config = config
        pot = params.potential
        self.cap_L, self.lam = pot.cap_L, pot.lam
        span = self.lam - self.cap_L
        self.grid = self.cap_L + span * np.geomspace(1e-6, 1.0, config.envelope_samples)
        self.grid[-1] = self.lam
        self.w_small = 4.0 ** params.n
        self.w_big = 4.0 ** (2 * params.n)
        self._envs = {}
        for name, fn in (("b1", self._abs_grad), ("b2", self._hess), ("h", self._ratio)):
            vals = fn(self.grid)
            monotone = bool(np.all(np.diff(vals) <= 1e-12 * np.abs(vals[:-1])))
            suffix = np.maximum.accumulate(vals[::-1])[::-1]
            self._envs[name] = (fn, monotone, suffix)

    # integrands -----------------------------------------------------------
    def _abs_grad(self, q):
        return np.abs(self.params.potential.grad(q))

    def _hess(self, q):
        return self.params.potential.hess(q)

    def _ratio(self, q):
        pot = self.params.potential
        V = pot.value(q)
        small = V < RATIO_GUARD
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pot.grad(q) ** 2 / np.where(small, 1.0, V)
        return np.where(small, 2.0 * pot.hess(q), ratio)

    def monotone_fast_path(self, name: str) -> bool:
        return self._envs[name][1]

    def _envelope(self, name, q):
        q = np.asarray(q, dtype=float)
        if np.any(~(q > self.cap_L)):
            raise DomainError("envelope argument must exceed L")
        fn, monotone, suffix = self._envs[name]
        active = q < self.lam
        qc = np.where(active, q, self.lam)
        val = fn(qc)
        if not monotone:
            idx = np.minimum(np.searchsorted(self.grid, qc), self.grid.size - 1)
            val = np.maximum(val, suffix[idx])
        return np.where(active, val, 0.0)

    # envelopes in the spacing variable -----------------------------------
    def b1(self, q):
        return self._envelope("b1", q)

    def b2(self, q):
        return self._envelope("b2", q)

    def h(self, q):
        return self._envelope("h", q)

    # functions of the energy level ---------------------------------------
    def rho(self, r):
        return v_inverse(r, self.params)

    def gamma(self, r):
        return self.h(self.rho(r))

    def phi(self, r):
        p = self.params
        c = 2.0 * self.b1(self.rho(r))
        if getattr(p.softening, "convex", False):
            gmax = np.maximum(gain_g(-c, p), gain_g(c, p))
        else:
            u = np.linspace(-1.0, 1.0, self.config.envelope_samples)
            gmax = np.max(gain_g(np.multiply.outer(c, u), p), axis=-1)
        return p.mu + gmax

    def phitilde(self, r):
        return self.b2(self.rho(r))

    def R(self, r):
        p, b = self.params, self.config.beta
        return (2.0 + 0.5 * self.w_big * self.gamma(r)
                + self.w_small * (self.phi(r) + 3.5 / p.mu * self.phitilde(r)) + b / p.mu)

    def kappa(self, r):
        return 1.0 + self.R(r) + 0.5 * self.w_big * self.gamma(r)


def certificate_tables(params, config=None, tables=None) -> CertificateTables:
    if tables is not None:
        return tables
    return CertificateTables(params, config or LyapunovConfig())


def envelope_b1(q, params, config=None, tables=None):
    return certificate_tables(params, config, tables).b1(q)


def envelope_b2(q, params, config=None, tables=None):
    return certificate_tables(params, config, tables).b2(q)


def ratio_gamma(r, params, config=None, tables=None):
    return certificate_tables(params, config, tables).gamma(r)


def gain_cap_phi(r, params, config=None, tables=None):
    return certificate_tables(params, config, tables).phi(r)


def hess_cap_phitilde(r, params, config=None, tables=None):
    return certificate_tables(params, config, tables).phitilde(r)


def weight_R(r, params, config=None, tables=None):
    return certificate_tables(params, config, tables).R(r)


def kappa_bound(r, params, config=None, tables=None):
    return certificate_tables(params, config, tables).kappa(r)


def _weights(n):
    return 4.0 ** np.arange(2, n + 1)


def strict_W(state: MicroState, params: ModelParams, config=None, tables=None, check=True):
    tab = certificate_tables(params, config, tables)
    H = energy_H(state, params, check=check)
    cross = np.sum(_weights(params.n) * params.potential.grad(state.s)
                   * (state.v[..., 1:] - params.v_star), axis=-1)
    return tab.R(H) * H - cross


def decay_target(state: MicroState, params: ModelParams, beta: float):
    """Right-hand side of the required decay rate of ``W``."""
    kin = np.sum((state.v - params.v_star) ** 2, axis=-1)
    pot = np.sum(_weights(params.n) * params.potential.grad(state.s) ** 2, axis=-1)
    return -beta * params.mu * kin - 0.125 * pot


def _rk4_batch(state: MicroState, params: ModelParams, h: float) -> MicroState:
    n = params.n

    def f(y):
        return micro_vector_field(MicroState.from_flat(y, n), params, check=False).flat()

    y = state.flat()
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return MicroState.from_flat(y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), n)


def W_rate_fd(state: MicroState, params: ModelParams, config: LyapunovConfig, tables=None):
    """Centered difference of ``W`` along the flow, half-step ``config.fd_dt``.

    The neighbours are one RK4 step forward and backward from each state.
    """
    tab = certificate_tables(params, config, tables)
    h = config.fd_dt
    fwd = strict_W(_rk4_batch(state, params, h), params, tables=tab, check=False)
    bwd = strict_W(_rk4_batch(state, params, -h), params, tables=tab, check=False)
    return (fwd - bwd) / (2.0 * h)


@dataclass
class AuditReport:
    t: np.ndarray
    H: np.ndarray
    W: np.ndarray
    kappaH: np.ndarray
    dWdt: np.ndarray
    rhs_bound: np.ndarray
    margin: np.ndarray
    sandwich_violations: int
    decay_violations: int

    @property
    def ok(self) -> bool:
        return self.sandwich_violations == 0 and self.decay_violations == 0

    @property
    def worst_margin(self) -> float:
        return float(self.margin.min()) if self.margin.size else float("inf")

    def summary(self) -> dict:
        return {
            "snapshots": int(self.t.size),
            "sandwich_violations": self.sandwich_violations,
            "decay_violations": self.decay_violations,
            "worst_decay_margin": self.worst_margin,
            "worst_lower_gap": float(np.min(self.W - self.H)) if self.t.size else 0.0,
            "worst_upper_gap": float(np.min(self.kappaH - self.W)) if self.t.size else 0.0,
        }

    def to_csv(self, path):
        write_csv(path, ["t", "H", "W", "kappaH", "dWdt", "rhs_bound", "margin"],
                  np.column_stack([self.t, self.H, self.W, self.kappaH, self.dWdt,
                                   self.rhs_bound, self.margin]))


REL_TOL = 1e-3
ABS_TOL = 1e-6


def audit_trajectory(traj: Trajectory, params: ModelParams, config: LyapunovConfig = LyapunovConfig(),
                     tables=None) -> AuditReport:
    """Check the sandwich ``H <= W <= kappa(H) H`` and the decay bound at interior snapshots.

    ``margin`` is ``rhs_bound + tol - dWdt`` with ``tol = 1e-3 |rhs_bound| + 1e-6``;
    a negative margin is a violation.
    """
    if traj.t.size >= 2 and (traj.t[1] - traj.t[0]) > 10 * config.fd_dt * (1 + 1e-9):
        raise PreconditionError("trajectory too sparse: snapshot spacing exceeds 10 * fd_dt")
    tab = certificate_tables(params, config, tables)
    sl = slice(1, -1) if traj.t.size > 2 else slice(0, 0)
    st = MicroState(traj.s[sl], traj.v[sl])
    H = energy_H(st, params, check=False)
    W = strict_W(st, params, tables=tab, check=False)
    kH = tab.kappa(H) * H
    dW = W_rate_fd(st, params, config, tables=tab)
    rhs = decay_target(st, params, config.beta)
    margin = rhs + REL_TOL * np.abs(rhs) + ABS_TOL - dW
    sandwich = int(np.sum((W < H) | (W > kH)))
    return AuditReport(traj.t[sl], H, W, kH, dW, rhs, margin, sandwich, int(np.sum(margin < 0)))


def random_omega_states(params: ModelParams, count: int, seed: int = 0, s_span: float = 10.0) -> MicroState:
    """Seeded states spread over Omega, spacings in ``(L, lam + s_span)``."""
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random((count, params.n - 1))  # (0, 1]
    s = params.cap_L + (params.lam + s_span - params.cap_L) * u
    v = params.v_max * rng.random((count, params.n))
    return MicroState(s, v)


@dataclass(frozen=True)
class ClaimReport:
    gain_cap: int       # k_i <= phi(H)
    hess_cap: int       # V''(s_i) <= phitilde(H)
    ratio_cap: int      # V'(s_i)^2 <= gamma(H) V(s_i)
    checked: int

    @property
    def ok(self) -> bool:
        return self.gain_cap == 0 and self.hess_cap == 0 and self.ratio_cap == 0


def check_claims(states: MicroState, params: ModelParams, config=None, tables=None, rtol=1e-12) -> ClaimReport:
    """Count violations of the three envelope inequalities on a batch of states.

    ``rtol`` absorbs floating-point ties (for instance a state whose whole
    energy sits in a single spacing).
    """
    tab = certificate_tables(params, config, tables)
    H = energy_H(states, params)
    k = controller_gains(states, params)
    pot = params.potential
    phi = tab.phi(H)[..., None]
    pt = tab.phitilde(H)[..., None]
    gam = tab.gamma(H)[..., None]
    dV = pot.grad(states.s)
    lhs_r = dV**2
    rhs_r = gam * pot.value(states.s)
    return ClaimReport(
        gain_cap=int(np.sum(k > phi * (1 + rtol))),
        hess_cap=int(np.sum(pot.hess(states.s) > pt * (1 + rtol) + 1e-300)),
        ratio_cap=int(np.sum(lhs_r > rhs_r * (1 + rtol) + 1e-300)),
        checked=int(H.size),
    )


def monotonicity_report(tables: CertificateTables, points: int = 64) -> dict:
    """Direction checks for every envelope on ``points``-point grids.

    Returns a mapping name -> bool (True when the expected direction holds).
    """
    q = tables.cap_L + (tables.lam - tables.cap_L) * np.geomspace(1e-4, 1.0, points)
    r = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, points - 1)])
    tol = 1e-12

    def nonincreasing(a):
        return bool(np.all(np.diff(a) <= tol * (1 + np.abs(a[:-1]))))

    def nondecreasing(a):
        return bool(np.all(np.diff(a) >= -tol * (1 + np.abs(a[:-1]))))

    return {
        "rho": nonincreasing(tables.rho(r)),
        "b1": nonincreasing(tables.b1(q)),
        "b2": nonincreasing(tables.b2(q)),
        "h": nonincreasing(tables.h(q)),
        "gamma": nondecreasing(tables.gamma(r)),
        "phi": nondecreasing(tables.phi(r)),
        "phitilde": nondecreasing(tables.phitilde(r)),
        "R": nondecreasing(tables.R(r)),
        "kappa": nondecreasing(tables.kappa(r)),
    }
