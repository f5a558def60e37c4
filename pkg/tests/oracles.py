"""Independent reference computations used by the test suite.

Nothing here imports the library's state machinery. Every optical element
is a dense unitary exp(i theta (a^dag b + a b^dag)) on a truncated Fock
space. The truncation is exact because the generator conserves total
photon number and the truncation keeps every state with total <= cutoff.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.linalg import expm, solve_continuous_lyapunov

# Modes of the explicit-environment model.
C, D, E, PA, QA = range(5)


@lru_cache(maxsize=None)
def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1)


@lru_cache(maxsize=None)
def two_mode_unitary(dim: int, theta: float) -> np.ndarray:
    """exp(i theta (a^dag b + a b^dag)) as a (dim, dim, dim, dim) tensor [a', b', a, b]."""
    a = np.kron(_ladder(dim), np.eye(dim))
    b = np.kron(np.eye(dim), _ladder(dim))
    G = a.T @ b + a @ b.T
    return expm(1j * theta * G).reshape(dim, dim, dim, dim)


def apply_two_mode(psi: np.ndarray, U: np.ndarray, i: int, j: int) -> np.ndarray:
    out = np.tensordot(U, psi, axes=([2, 3], [i, j]))
    return np.moveaxis(out, [0, 1], [i, j])


def apply_number_phase(psi: np.ndarray, mode: int, phi: float) -> np.ndarray:
    n = np.arange(psi.shape[mode])
    shape = [1] * psi.ndim
    shape[mode] = -1
    return psi * np.exp(1j * phi * n).reshape(shape)


def multiply_number(psi: np.ndarray, mode: int) -> np.ndarray:
    n = np.arange(psi.shape[mode])
    shape = [1] * psi.ndim
    shape[mode] = -1
    return psi * n.reshape(shape)


def balanced_bs(psi: np.ndarray, i: int, j: int) -> np.ndarray:
    """[[1, 1], [1, -1]]/sqrt(2) = diag(1, -i) exp(i pi/4 G) diag(1, -i)."""
    dim = psi.shape[i]
    psi = apply_number_phase(psi, j, -math.pi / 2)
    psi = apply_two_mode(psi, two_mode_unitary(dim, math.pi / 4), i, j)
    return apply_number_phase(psi, j, -math.pi / 2)


def transmissivity_bs(psi: np.ndarray, eta: float, i: int, j: int) -> np.ndarray:
    theta = math.acos(math.sqrt(eta))
    return apply_two_mode(psi, two_mode_unitary(psi.shape[i], theta), i, j)


def brute_force_distribution(N: int, phi: float, eta_p: float, eta: float, eta_d: float):
    """Count distribution and phase derivative from five explicit modes.

    Arms c, d; loss environment e on c; detector ancillas p', q'.
    Preparation inefficiency is a binomial mixture of Fock inputs.
    Returns (P, dP) arrays indexed [m, n] over counts up to 2N.
    """
    dim = 2 * N + 1
    P = np.zeros((dim, dim))
    dP = np.zeros((dim, dim))
    for na in range(N + 1):
        for nb in range(N + 1):
            w = (math.comb(N, na) * eta_p**na * (1 - eta_p) ** (N - na)
                 * math.comb(N, nb) * eta_p**nb * (1 - eta_p) ** (N - nb))
            if w == 0:
                continue
            psi = np.zeros((dim,) * 5, dtype=complex)
            psi[na, nb, 0, 0, 0] = 1.0
            psi = balanced_bs(psi, C, D)
            psi = apply_number_phase(psi, C, phi)
            dpsi = 1j * multiply_number(psi, C)
            pair = []
            for v in (psi, dpsi):
                v = transmissivity_bs(v, eta, C, E)
                v = balanced_bs(v, C, D)
                v = transmissivity_bs(v, eta_d, C, PA)
                v = transmissivity_bs(v, eta_d, D, QA)
                pair.append(v)
            v, dv = pair
            P += w * np.sum(np.abs(v) ** 2, axis=(2, 3, 4))
            dP += w * np.sum(2 * (v.conj() * dv).real, axis=(2, 3, 4))
    return P, dP


def symbolic_bs1(N: int) -> dict[tuple[int, int], complex]:
    """Amplitudes of |N, N> after a^dag -> (c^dag + d^dag)/sqrt 2, b^dag -> (c^dag - d^dag)/sqrt 2."""
    c, d = sp.symbols("c d")
    poly = sp.Poly(sp.expand((c + d) ** N * (c - d) ** N), c, d)
    out = {}
    for (j, k), coeff in poly.terms():
        amp = sp.Rational(coeff) * sp.sqrt(sp.factorial(j) * sp.factorial(k)) / (2**N * sp.factorial(N))
        out[(j, k)] = complex(sp.N(amp, 30))
    return out


def dense_qfi(rho: np.ndarray, drho: np.ndarray, cutoff: float = 1e-10) -> float:
    """QFI via the symmetric logarithmic derivative solved as a Lyapunov equation."""
    # rho L + L rho = 2 drho, restricted to the support of rho
    lam, V = np.linalg.eigh(rho)
    keep = lam > cutoff
    Vs = V[:, keep]
    r = np.diag(lam[keep])
    dr = Vs.conj().T @ drho @ Vs
    L = solve_continuous_lyapunov(r, 2 * dr)
    support = float(np.trace(dr @ L).real)
    # kernel contribution: off-diagonal support/kernel blocks
    Vk = V[:, ~keep]
    cross = Vs.conj().T @ drho @ Vk
    return support + 4.0 * float(np.sum(np.abs(cross) ** 2 / lam[keep][:, None]))
