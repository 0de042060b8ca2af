"""One-dimensional minimization over a positive scale parameter."""

import math

import numpy as np
from scipy.optimize import minimize_scalar


def minimize_log(f, lo, hi, points=241, xatol=1e-9):
    """Minimize f on [lo, hi] (lo > 0) by a geometric scan plus a bounded Brent polish.

    Non-finite values of f are treated as +inf, so constraint violations can be
    signalled by returning inf. Returns (value, argmin).
    """
    if not 0 < lo <= hi:
        raise ValueError("need 0 < lo <= hi")
    if lo == hi:
        return _safe(f, lo), lo
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), points))
    vals = np.array([_safe(f, x) for x in grid])
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return math.inf, float(grid[i])
    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, points - 1)])
    res = minimize_scalar(lambda t: _safe(f, math.exp(t)), bounds=(a, b), method="bounded",
                          options={"xatol": xatol})
    if res.fun < vals[i]:
        return float(res.fun), float(math.exp(res.x))
    return float(vals[i]), float(grid[i])


def _safe(f, x):
    try:
        v = f(x)
    except (ValueError, ArithmeticError):
        return math.inf
    v = float(v)
    return v if math.isfinite(v) else math.inf
