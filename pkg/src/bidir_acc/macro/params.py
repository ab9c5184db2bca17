"""Macroscopic constants, the density potential Phi and the anticipation term Xi."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import QuadraticSoftening
from ..errors import DomainError, ParameterError


class QuarticPhi:
    """``Phi(rho) = c * (rho - rho_bar)**4 / (rho_max - rho)`` above ``rho_bar``, zero below.

    The fourth power makes Phi three times continuously differentiable at
    ``rho_bar``.
    """

    def __init__(self, rho_bar: float, rho_max: float, phi_scale: float = 1.0):
        if not 0 < rho_bar < rho_max:
            raise ParameterError("0 < rho_bar < rho_max violated")
        if not phi_scale > 0:
            raise ParameterError("phi_scale > 0 violated")
        self.rho_bar, self.rho_max, self.phi_scale = float(rho_bar), float(rho_max), float(phi_scale)

    def _split(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(~((rho > 0) & (rho < self.rho_max))):
            raise DomainError(f"density outside (0, rho_max = {self.rho_max})")
        u = np.maximum(rho - self.rho_bar, 0.0)
        return u, self.rho_max - rho

    def value(self, rho):
        u, w = self._split(rho)
        return self.phi_scale * u**4 / w

    def grad(self, rho):
        u, w = self._split(rho)
        return self.phi_scale * (4 * u**3 / w + u**4 / w**2)

    def hess(self, rho):
        u, w = self._split(rho)
        return self.phi_scale * (12 * u**2 / w + 8 * u**3 / w**2 + 2 * u**4 / w**3)

    def kernel_params(self):
        return {"phi_scale": self.phi_scale, "rho_bar": self.rho_bar, "rho_max": self.rho_max}


@dataclass(frozen=True)
class MacroParams:
    """Constants of the continuum model.

    ``omega`` is the linear relaxation rate; the relaxation coefficient used
    with a nonzero Xi is ``mu_eff + g(Xi)`` with ``mu_eff = omega - g(0)``.
    ``m_total`` is only needed by the micro/macro comparison.
    """

    omega: float = 1.2
    v_star: float = 1.0
    v_max: float = 2.0
    rho_bar: float = 1.0
    rho_max: float = 2.0
    phi_scale: float = 1.0
    epsilon: float = 0.2
    m_total: float | None = None

    def __post_init__(self):
        problems = []
        if not self.omega > 0:
            problems.append("omega > 0")
        if not 0 < self.rho_bar < self.rho_max:
            problems.append("0 < rho_bar < rho_max")
        if not 0 < self.v_star < self.v_max:
            problems.append("0 < v_star < v_max")
        if not self.phi_scale > 0:
            problems.append("phi_scale > 0")
        if not self.epsilon > 0:
            problems.append("epsilon > 0")
        if self.m_total is not None and not self.m_total > 0:
            problems.append("m_total > 0")
        if not problems and not self.mu_eff > 0:
            problems.append("omega > g(0)")
        if problems:
            raise ParameterError("violated: " + ", ".join(problems))

    @property
    def phi(self) -> QuarticPhi:
        return QuarticPhi(self.rho_bar, self.rho_max, self.phi_scale)

    def gain_g(self, z):
        f = QuadraticSoftening(self.epsilon).value(z)
        vs, vm = self.v_star, self.v_max
        return vm * f / (vs * (vm - vs)) - np.asarray(z, dtype=float) / vs

    @property
    def mu_eff(self) -> float:
        return self.omega - float(self.gain_g(0.0))


def example3_params(**changes) -> MacroParams:
    return MacroParams(**changes)


def phi_potential(rho, params: MacroParams):
    """Return ``(Phi, Phi', Phi'')`` at ``rho``."""
    phi = params.phi
    return phi.value(rho), phi.grad(rho), phi.hess(rho)


def xi_term(rho, rho_x, params: MacroParams):
    phi = params.phi
    rho = np.asarray(rho, dtype=float)
    return -np.asarray(rho_x, dtype=float) * (2.0 * phi.grad(rho) + rho * phi.hess(rho))
