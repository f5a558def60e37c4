"""Legendre polynomials and associated Legendre functions by upward recurrence."""

from __future__ import annotations

import math


def _check_x(x: float):
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"argument must satisfy |x| <= 1, got {x!r}")


def legendre(n: int, x: float) -> float:
    """P_n(x) from (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    _check_x(x)
    prev, cur = 1.0, x
    if n == 0:
        return prev
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
    return cur


def assoc_legendre(n: int, l: int, x: float) -> float:
    """P_n^l(x) including the Condon-Shortley phase (-1)^l.

    Starts from P_l^l = (-1)^l (2l-1)!! (1-x^2)^(l/2) and climbs in degree with
    (k-l) P_k^l = (2k-1) x P_{k-1}^l - (k+l-1) P_{k-2}^l.
    """
    if not 0 <= l <= n:
        raise ValueError(f"order must satisfy 0 <= l <= n, got n={n}, l={l}")
    _check_x(x)
    somx2 = math.sqrt((1.0 - x) * (1.0 + x))
    pll = 1.0
    for k in range(1, l + 1):
        pll *= -(2 * k - 1) * somx2
    if n == l:
        return pll
    prev, cur = pll, x * (2 * l + 1) * pll
    for k in range(l + 2, n + 1):
        prev, cur = cur, ((2 * k - 1) * x * cur - (k + l - 1) * prev) / (k - l)
    return cur
