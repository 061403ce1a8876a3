"""Small one-dimensional minimisation helpers."""

import math

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    # the endpoints can be optimal (e.g. a minimiser sitting on the boundary)
    cands = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = min(cands)
    return x, fx


def grid_golden(f, a: float, b: float, n: int = 64, tol: float = 1e-12):
    """Bracket the minimum on an ``n``-point grid, then refine by golden section."""
    grid = np.linspace(a, b, n)
    vals = np.array([f(t) for t in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n - 1)]
    x, fx = golden_section(f, lo, hi, tol)
    if vals[i] < fx:
        return float(grid[i]), float(vals[i])
    return x, fx
