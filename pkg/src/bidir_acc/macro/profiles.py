"""Initial profiles with declared analytic bounds."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import PreconditionError, ProfileBoundError


@dataclass(frozen=True)
class SmoothProfile:
    """A profile together with bounds that hold on the whole real line.

    ``base`` is the constant the profile takes far away and ``sup_dev`` bounds
    ``|value - base|``.  Bounds are declared, not estimated;
    :meth:`check_bounds` catches declarations that sampled values contradict.
    """

    func: Callable
    d1: Callable
    sup_abs: float
    d1_inf: float
    d1_sup: float
    base: float
    sup_dev: float
    d2: Callable | None = None
    d2_sup_abs: float | None = None
    sup_value: float | None = None      # sup of the value itself (densities)
    inf_value: float | None = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self.d1(np.asarray(x, dtype=float))

    def deriv2(self, x):
        if self.d2 is None:
            raise PreconditionError("profile has no second derivative")
        return self.d2(np.asarray(x, dtype=float))

    @property
    def d1_sup_abs(self) -> float:
        return max(abs(self.d1_inf), abs(self.d1_sup))

    def check_bounds(self, x) -> list:
        """Names of declared bounds that some sample in ``x`` exceeds."""
        val, d = self(x), self.deriv(x)
        bad = []
        if np.any(np.abs(val) > self.sup_abs):
            bad.append("sup_abs")
        if np.any(np.abs(val - self.base) > self.sup_dev):
            bad.append("sup_dev")
        if np.any(d < self.d1_inf):
            bad.append("d1_inf")
        if np.any(d > self.d1_sup):
            bad.append("d1_sup")
        if self.d2 is not None and self.d2_sup_abs is not None and np.any(np.abs(self.deriv2(x)) > self.d2_sup_abs):
            bad.append("d2_sup_abs")
        if self.sup_value is not None and np.any(val > self.sup_value):
            bad.append("sup_value")
        if self.inf_value is not None and np.any(val < self.inf_value):
            bad.append("inf_value")
        return bad

    def require_bounds(self, x):
        bad = self.check_bounds(x)
        if bad:
            raise ProfileBoundError("declared bounds contradicted by samples: " + ", ".join(bad))


def constant_profile(c: float) -> SmoothProfile:
    return SmoothProfile(lambda x: np.full_like(x, c), np.zeros_like, abs(c), 0.0, 0.0, c, 0.0,
                         d2=np.zeros_like, d2_sup_abs=0.0, sup_value=c, inf_value=c)


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    return inside, np.where(inside, x * (x - 1), 0.0)


def example3_density(base: float = 0.1, scale: float = 5.0) -> SmoothProfile:
    """``base + scale * x**2 (x-1)**2`` on (0, 1), ``base`` elsewhere."""
    def f(x):
        return base + scale * _bump(x)[1] ** 2

    def d1(x):
        _, q = _bump(x)
        return scale * 2 * q * (2 * x - 1)

    peak = scale / 16
    slope = scale * 0.19245009   # max |2 q (2x-1)| on (0, 1), rounded up
    return SmoothProfile(f, d1, abs(base) + peak, -slope, slope, base, peak,
                         sup_value=base + peak, inf_value=base)


def example3_speed(base: float = 1.0, scale: float = 8.0) -> SmoothProfile:
    """``base + scale * x**3 (x-1)**3`` on (0, 1), ``base`` elsewhere (a dip for scale > 0)."""
    def f(x):
        return base + scale * _bump(x)[1] ** 3

    def d1(x):
        _, q = _bump(x)
        return scale * 3 * q**2 * (2 * x - 1)

    def d2(x):
        inside, q = _bump(x)
        return np.where(inside, scale * 6 * q * (5 * x * x - 5 * x + 1), 0.0)

    dip = abs(scale) / 64
    slope = abs(scale) * 0.053665632   # max |3 q^2 (2x-1)| on (0, 1), rounded up
    return SmoothProfile(f, d1, max(abs(base), abs(base - dip) if scale > 0 else abs(base + dip)),
                         -slope, slope, base, dip, d2=d2, d2_sup_abs=abs(scale) * 0.37500000001,
                         sup_value=max(base, base - np.sign(scale) * dip),
                         inf_value=min(base, base - np.sign(scale) * dip))
