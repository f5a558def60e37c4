"""Quantum and classical Fisher information."""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from fisherlab.fock import NORM_TOL, BlockDiagonalState, DensityOperator, PureState, inner_product

EIG_CUTOFF = 1e-10
PROB_FLOOR = 1e-12
DERIV_FLOOR = 1e-9


class SingularityError(ArithmeticError):
    """A vanishing outcome probability carries a non-vanishing phase derivative."""


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Joint photon-count probabilities p[(m, n)] and their phase derivatives."""

    probs: Mapping[tuple[int, int], float]
    derivs: Mapping[tuple[int, int], float]
    phase: float = 0.0

    def __post_init__(self):
        if set(self.probs) != set(self.derivs):
            raise ValueError("probabilities and derivatives must share outcome keys")
        probs = {}
        for key, p in self.probs.items():
            if p < -PROB_FLOOR:
                raise ValueError(f"negative probability {p!r} for outcome {key}")
            probs[tuple(key)] = max(float(p), 0.0)
        derivs = {tuple(k): float(v) for k, v in self.derivs.items()}
        total = math.fsum(probs.values())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}")
        dsum = math.fsum(derivs.values())
        if abs(dsum) > 1e-10:
            raise ValueError(f"derivatives sum to {dsum!r}, expected 0")
        object.__setattr__(self, "probs", MappingProxyType(probs))
        object.__setattr__(self, "derivs", MappingProxyType(derivs))

    def max_count(self) -> int:
        return max(max(k) for k in self.probs)

    def as_arrays(self, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        size = self.max_count() + 1 if size is None else size
        p = np.zeros((size, size))
        dp = np.zeros((size, size))
        for (m, n), v in self.probs.items():
            p[m, n] = v
            dp[m, n] = self.derivs[(m, n)]
        return p, dp

    def relabeled(self, mapping: Callable[[tuple[int, int]], tuple[int, int]]):
        return PhotonNumberDistribution(
            {mapping(k): v for k, v in self.probs.items()},
            {mapping(k): v for k, v in self.derivs.items()},
            self.phase,
        )


def qfi_pure(state: PureState, deriv: PureState) -> float:
    """4(<d psi|d psi> - |<psi|d psi>|^2) for a normalized state."""
    if abs(state.norm_squared() - 1.0) > NORM_TOL:
        raise ValueError("qfi_pure requires a normalized state")
    dd = inner_product(deriv, deriv).real
    overlap = inner_product(state, deriv)
    return max(4.0 * (dd - abs(overlap) ** 2), 0.0)


def qfi_block(state: BlockDiagonalState, derivs: Sequence[PureState]) -> float:
    """Weighted sum of per-block pure-state QFIs.

    Valid when the blocks have mutually orthogonal supports and weights that
    do not depend on the phase (e.g. phase followed by loss).
    """
    if len(derivs) != len(state.blocks):
        raise ValueError("one derivative vector per block is required")
    seen: set = set()
    for b in state.blocks:
        labels = set(b.state.amplitudes)
        if labels & seen:
            raise ValueError("blocks overlap; use qfi_general on the flattened state")
        seen |= labels
    return math.fsum(b.weight * qfi_pure(b.state, d) for b, d in zip(state.blocks, derivs))


def block_derivative_density(state: BlockDiagonalState, derivs: Sequence[PureState],
                             basis=None) -> DensityOperator:
    """d rho / d phi for rho = sum_m w_m |psi_m><psi_m| with phase-independent weights."""
    if basis is None:
        basis = tuple(sorted({lab for b in state.blocks for lab in b.state.amplitudes}))
    pos = {lab: i for i, lab in enumerate(basis)}
    mat = np.zeros((len(basis), len(basis)), dtype=complex)
    for b, d in zip(state.blocks, derivs):
        v = np.zeros(len(basis), dtype=complex)
        dv = np.zeros(len(basis), dtype=complex)
        for lab, a in b.state.amplitudes.items():
            v[pos[lab]] = a
        for lab, a in d.amplitudes.items():
            dv[pos[lab]] = a
        outer = np.outer(dv, v.conj())
        mat += b.weight * (outer + outer.conj().T)
    return DensityOperator(basis, mat, derivative=True)


def qfi_general(rho: DensityOperator, drho: DensityOperator, cutoff: float = EIG_CUTOFF) -> float:
    """2 sum_{ij} |<i|drho|j>|^2 / (l_i + l_j) over the eigenbasis of rho."""
    if not drho.derivative:
        raise ValueError("drho must be a derivative operator")
    basis = rho.basis
    if drho.basis != basis:
        basis = tuple(sorted(set(rho.basis) | set(drho.basis)))
        r, dr = rho.embed(basis), drho.embed(basis)
    else:
        r, dr = rho.matrix, drho.matrix
    if np.max(np.abs(dr - dr.conj().T), initial=0.0) > NORM_TOL:
        raise ValueError("drho is not Hermitian")
    lam, vecs = np.linalg.eigh(r)
    d = vecs.conj().T @ dr @ vecs
    denom = lam[:, None] + lam[None, :]
    mask = denom > cutoff
    return float(2.0 * np.sum(np.abs(d[mask]) ** 2 / denom[mask]))


def cfi_terms(p: np.ndarray, dp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-outcome (dp)^2/p with the small-probability rule; also a singular-outcome mask."""
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    small = p < PROB_FLOOR
    singular = small & (np.abs(dp) >= DERIV_FLOOR)
    safe = np.where(small, 1.0, p)
    terms = np.where(small, 0.0, dp**2 / safe)
    return terms, singular


def cfi(dist: PhotonNumberDistribution) -> float:
    """Classical Fisher information sum (dp/dphi)^2 / p over outcomes."""
    keys = list(dist.probs)
    p = np.array([dist.probs[k] for k in keys])
    dp = np.array([dist.derivs[k] for k in keys])
    terms, singular = cfi_terms(p, dp)
    if singular.any():
        bad = [keys[i] for i in np.flatnonzero(singular)]
        raise SingularityError(
            f"outcomes {bad} have p < {PROB_FLOOR} but |dp/dphi| >= {DERIV_FLOOR} "
            f"at phi={dist.phase!r}; evaluate at an offset phase")
    return math.fsum(terms.tolist())


@dataclass(frozen=True)
class DerivativeReport:
    phase: float
    step: float
    max_abs_error: float
    worst_outcome: tuple[int, int] | None


def finite_difference_check(evaluate: Callable[[float], PhotonNumberDistribution],
                            phi: float, h: float = 1e-4) -> DerivativeReport:
    """Compare analytic derivatives against central differences at ``phi``."""
    if not 0.0 < h <= 1e-2:
        raise ValueError("step h must lie in (0, 1e-2]")
    mid = evaluate(phi)
    plus = evaluate(phi + h)
    minus = evaluate(phi - h)
    worst, worst_key = 0.0, None
    for key, analytic in mid.derivs.items():
        numeric = (plus.probs.get(key, 0.0) - minus.probs.get(key, 0.0)) / (2 * h)
        err = abs(numeric - analytic)
        if err > worst:
            worst, worst_key = err, key
    return DerivativeReport(phi, h, worst, worst_key)
