"""Platoon model constants, potential, softening and the ODE right-hand side.

Arrays of spacings have ``n - 1`` entries (vehicles 2..n) and arrays of
speeds have ``n`` entries (vehicles 1..n).  Every function here accepts
leading batch dimensions, so a whole trajectory can be evaluated at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError


class CubicPotential:
    """Repulsive potential ``V(s) = (lam - s)**3 / (s - L)`` below ``lam``, zero above."""

    kernel_kind = 0

    def __init__(self, cap_L: float, lam: float):
        if not lam > cap_L > 0:
            raise ParameterError("lambda > cap_L > 0 violated")
        self.cap_L = float(cap_L)
        self.lam = float(lam)

    def _split(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(~(s > self.cap_L)):
            raise DomainError(f"spacing <= L = {self.cap_L}: potential undefined")
        active = s < self.lam
        u = np.where(active, self.lam - s, 0.0)
        w = s - self.cap_L
        return active, u, w

    def value(self, s):
        active, u, w = self._split(s)
        return np.where(active, u**3 / w, 0.0)

    def grad(self, s):
        active, u, w = self._split(s)
        return np.where(active, -3.0 * u**2 / w - u**3 / w**2, 0.0)

    def hess(self, s):
        active, u, w = self._split(s)
        return np.where(active, 6.0 * u / w + 6.0 * u**2 / w**2 + 2.0 * u**3 / w**3, 0.0)

    def kernel_params(self):
        return {"pot_kind": 0.0, "cap_L": self.cap_L, "lam": self.lam}

    def __repr__(self):
        return f"CubicPotential(cap_L={self.cap_L}, lam={self.lam})"


class ReciprocalDensityPotential:
    """``V(s) = Phi(m1 / s)`` for a density potential ``Phi`` and per-vehicle mass ``m1``.

    With ``Phi`` vanishing up to ``rho_bar`` and blowing up at ``rho_max`` this
    has interaction range ``m1 / rho_bar`` and collision distance ``m1 / rho_max``.
    """

    def __init__(self, phi, mass_per_vehicle: float):
        self.phi = phi
        self.m1 = float(mass_per_vehicle)
        self.cap_L = self.m1 / phi.rho_max
        self.lam = self.m1 / phi.rho_bar

    def _density(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(~(s > self.cap_L)):
            raise DomainError(f"spacing <= L = {self.cap_L}: potential undefined")
        return s, self.m1 / s

    def value(self, s):
        _, q = self._density(s)
        return self.phi.value(q)

    def grad(self, s):
        s, q = self._density(s)
        return -self.phi.grad(q) * q / s

    def hess(self, s):
        s, q = self._density(s)
        return self.phi.hess(q) * q**2 / s**2 + 2.0 * self.phi.grad(q) * q / s**2

    def kernel_params(self):
        phi_params = getattr(self.phi, "kernel_params", None)
        if phi_params is None:
            return None
        return {"pot_kind": 1.0, "cap_L": self.cap_L, "lam": self.lam,
                "m1": self.m1, **phi_params()}


class QuadraticSoftening:
    """C1 softened ramp: zero below ``-eps``, parabola on ``(-eps, 0)``, ``x + eps/2`` above."""

    convex = True

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise ParameterError("epsilon > 0 violated")
        self.epsilon = float(epsilon)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        e = self.epsilon
        return np.where(x <= -e, 0.0,
                        np.where(x < 0.0, (x + e) ** 2 / (2 * e), (e * e + 2 * e * x) / (2 * e)))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        e = self.epsilon
        return np.where(x <= -e, 0.0, np.where(x < 0.0, (x + e) / e, 1.0))


@dataclass(frozen=True)
class ModelParams:
    mu: float
    v_star: float
    v_max: float
    cap_L: float
    lam: float
    epsilon: float
    n: int
    potential_override: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        problems = []
        if not self.mu > 0:
            problems.append("mu > 0")
        if not 0 < self.v_star < self.v_max:
            problems.append("0 < v_star < v_max")
        if not self.lam > self.cap_L > 0:
            problems.append("lambda > cap_L > 0")
        if not self.epsilon > 0:
            problems.append("epsilon > 0")
        if int(self.n) != self.n or self.n < 2:
            problems.append("n >= 2 (integer)")
        if problems:
            raise ParameterError("violated: " + ", ".join(problems))
        pot = self.potential_override
        if pot is not None and not (np.isclose(pot.cap_L, self.cap_L, rtol=1e-12)
                                    and np.isclose(pot.lam, self.lam, rtol=1e-12)):
            raise ParameterError("potential override disagrees with cap_L/lambda")
        object.__setattr__(self, "n", int(self.n))

    @property
    def potential(self):
        if self.potential_override is not None:
            return self.potential_override
        return CubicPotential(self.cap_L, self.lam)

    @property
    def softening(self):
        return QuadraticSoftening(self.epsilon)

    def replace(self, **changes):
        kw = {f: getattr(self, f) for f in
              ("mu", "v_star", "v_max", "cap_L", "lam", "epsilon", "n", "potential_override")}
        kw.update(changes)
        return ModelParams(**kw)


def example1_params(n: int = 6) -> ModelParams:
    """Constants of the six-vehicle convergence example."""
    return ModelParams(mu=0.5, v_star=30.0, v_max=35.0, cap_L=5.0, lam=20.0, epsilon=0.2, n=n)


def platoon_params(n: int) -> ModelParams:
    """Constants of the disturbance-attenuation experiments."""
    return ModelParams(mu=2.0, v_star=30.0, v_max=35.0, cap_L=5.1, lam=61.0, epsilon=2.0, n=n)


@dataclass(frozen=True)
class MicroState:
    """Spacings ``s`` (vehicles 2..n) and speeds ``v`` (vehicles 1..n)."""

    s: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        v = np.array(self.v, dtype=float)
        if s.shape[-1] != v.shape[-1] - 1:
            raise ValueError(f"need n-1 spacings for n speeds, got {s.shape[-1]} and {v.shape[-1]}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[-1]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.s, self.v], axis=-1)

    @classmethod
    def from_flat(cls, y, n: int) -> "MicroState":
        y = np.asarray(y, dtype=float)
        return cls(y[..., : n - 1], y[..., n - 1:])


def potential_value(s, params: ModelParams):
    return params.potential.value(s)


def potential_grad(s, params: ModelParams):
    return params.potential.grad(s)


def potential_hess(s, params: ModelParams):
    return params.potential.hess(s)


def softening_value(x, params: ModelParams):
    return params.softening.value(x)


def gain_g(z, params: ModelParams):
    """Speed-box enforcing gain; non-negative whenever ``f(z) >= max(z, 0)``."""
    f = params.softening.value(z)
    vs, vm = params.v_star, params.v_max
    return vm * f / (vs * (vm - vs)) - np.asarray(z, dtype=float) / vs


def omega_rate(params: ModelParams) -> float:
    """Relaxation rate of a platoon with no active interactions."""
    return float(params.mu + gain_g(0.0, params))


def _require_omega(s, v, params):
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~(s > params.cap_L)):
        raise DomainError("state outside Omega: spacing <= L")
    if np.any(~(v >= 0.0)) or np.any(~(v <= params.v_max)):
        raise DomainError("state outside Omega: speed outside [0, v_max]")
    return s, v


def interaction_forces(s, params: ModelParams):
    """Net spacing force on each vehicle, ``V'(s_i) - V'(s_{i+1})`` with the end terms."""
    dV = params.potential.grad(s)
    pad = [(0, 0)] * (dV.ndim - 1) + [(1, 1)]
    dVp = np.pad(dV, pad)
    return dVp[..., :-1] - dVp[..., 1:]


def controller_gains(state: MicroState, params: ModelParams, check: bool = True):
    s, v = state.s, state.v
    if check:
        _require_omega(s, v, params)
    return params.mu + gain_g(interaction_forces(s, params), params)


def micro_vector_field(state: MicroState, params: ModelParams, check: bool = True) -> MicroState:
    """Time derivative of ``(s, v)`` under the bidirectional controller."""
    s, v = state.s, state.v
    if check:
        _require_omega(s, v, params)
    z = interaction_forces(s, params)
    k = params.mu + gain_g(z, params)
    ds = v[..., :-1] - v[..., 1:]
    dv = -k * (v - params.v_star) + z
    return MicroState(ds, dv)
