import numpy as np


def bisect_monotone(func, target, lo, hi, xtol=1e-12, increasing=True, maxiter=200):
    """Vectorized bisection for ``func(x) = target`` on ``[lo, hi]``.

    Endpoints are never evaluated, so ``func`` may be singular there.  The
    bracket invariant is ``func(lo) <= target <= func(hi)`` for increasing
    ``func`` (reversed otherwise).  Returns ``(x, lo, hi)`` with
    ``hi - lo <= xtol`` elementwise.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(maxiter):
        width = hi - lo
        if np.all(width <= xtol):
            break
        mid = lo + 0.5 * width
        below = func(mid) < target if increasing else func(mid) > target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi), lo, hi


def newton_polish(func, deriv, target, x, lo, hi, steps=3):
    """A few guarded Newton steps; any step leaving ``[lo, hi]`` is discarded."""
    for _ in range(steps):
        d = deriv(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = x - (func(x) - target) / d
        ok = np.isfinite(cand) & (cand >= lo) & (cand <= hi) & (d != 0)
        x = np.where(ok, cand, x)
    return x
