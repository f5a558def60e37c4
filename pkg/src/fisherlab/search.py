"""One-dimensional searches: batched golden-section maximization and bisection."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class NoCrossingError(ValueError):
    """The searched function does not cross the target inside the interval."""


def _nan_to_neg(x):
    return np.where(np.isnan(x), -np.inf, x)


def golden_section_max(f: Callable[[np.ndarray], np.ndarray], a, b, tol: float = 1e-10):
    """Maximize f independently on each bracket [a_i, b_i].

    ``f`` maps an array of abscissae (one per bracket) to values of the same
    shape. Returns (x_best, f_best).
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    width = float(np.max(b - a)) if a.size else 0.0
    steps = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = _nan_to_neg(f(c))
    fd = _nan_to_neg(f(d))
    for _ in range(steps):
        left = fc >= fd
        # left probe wins: keep [a, d]; otherwise keep [c, b]
        a, b = np.where(left, a, c), np.where(left, d, b)
        c_new = np.where(left, b - INV_PHI * (b - a), d)
        d_new = np.where(left, c, a + INV_PHI * (b - a))
        fp = _nan_to_neg(f(np.where(left, c_new, d_new)))
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_new, d_new
    x = np.where(fc >= fd, c, d)
    return x, np.maximum(fc, fd)


def bisect_threshold(pred: Callable[[float], bool], lo: float = 0.0, hi: float = 1.0,
                     tol: float = 1e-4) -> float:
    """Smallest x in [lo, hi] with pred(x) true, for a predicate monotone in x."""
    if not pred(hi):
        raise NoCrossingError(f"condition fails at the upper end {hi!r}")
    if pred(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
