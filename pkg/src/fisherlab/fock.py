"""Sparse multi-mode Fock states and density operators at small photon number."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Label = tuple[int, ...]

NORM_TOL = 1e-12
PRUNE_TOL = 1e-15


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


def sqrt_factorial_ratio(num: Sequence[int], den: Sequence[int]) -> float:
    """sqrt(prod(num_i!) / prod(den_i!)) with the ratio formed exactly before rounding."""
    top = 1
    for k in num:
        top *= factorial(k)
    bottom = 1
    for k in den:
        bottom *= factorial(k)
    g = math.gcd(top, bottom)
    return math.sqrt((top // g) / (bottom // g))


@dataclass(frozen=True)
class PureState:
    """State vector stored as a sparse map from occupation labels to amplitudes.

    ``normalized=False`` marks vectors that are not states in their own right,
    e.g. phase derivatives or unnormalized Kraus images.
    """

    num_modes: int
    cutoff: int
    amplitudes: Mapping[Label, complex]
    normalized: bool = True

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("num_modes must be positive")
        amps = {}
        for label, amp in self.amplitudes.items():
            label = tuple(int(k) for k in label)
            if len(label) != self.num_modes:
                raise ValueError(f"label {label} does not have {self.num_modes} modes")
            if min(label) < 0:
                raise ValueError(f"negative occupation in {label}")
            if sum(label) > self.cutoff:
                raise ValueError(f"label {label} exceeds cutoff {self.cutoff}")
            amps[label] = complex(amp)
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))
        if self.normalized and abs(self.norm_squared() - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: <psi|psi> = {self.norm_squared()!r}")

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amplitudes.values())

    def labels(self) -> list[Label]:
        return sorted(self.amplitudes)

    def __getitem__(self, label: Iterable[int]) -> complex:
        return self.amplitudes.get(tuple(label), 0j)

    def __len__(self):
        return len(self.amplitudes)

    def scaled(self, factor: complex, normalized: bool = False) -> "PureState":
        return build_state(
            self.num_modes,
            self.cutoff,
            {k: factor * v for k, v in self.amplitudes.items()},
            normalized=normalized,
        )


def build_state(num_modes: int, cutoff: int, amps: Mapping[Label, complex],
                normalized: bool = True, prune: float | None = None) -> PureState:
    """Construct a PureState, dropping amplitudes with modulus below ``prune``."""
    tol = PRUNE_TOL if prune is None else prune
    kept = {k: v for k, v in amps.items() if abs(v) >= tol} if tol > 0 else dict(amps)
    return PureState(num_modes, cutoff, kept, normalized=normalized)


def fock_state(counts: Sequence[int], cutoff: int | None = None) -> PureState:
    counts = tuple(int(c) for c in counts)
    if min(counts) < 0:
        raise ValueError("photon numbers must be non-negative")
    cutoff = sum(counts) if cutoff is None else cutoff
    return PureState(len(counts), cutoff, {counts: 1.0})


def twin_fock(N: int) -> PureState:
    """|N>|N>, the two-mode input with N photons in each mode."""
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    return fock_state((N, N), cutoff=2 * N)


def hb_amplitude(N: int, n: int, phi: float) -> complex:
    """Coefficient of |2n, 2N-2n> in the Holland-Burnett state."""
    mag = sqrt_factorial_ratio((2 * n, 2 * N - 2 * n), (n, n, N - n, N - n)) / 2**N
    return mag * complex(math.cos(2 * n * phi), math.sin(2 * n * phi))


def hb_state(N: int, phi: float = 0.0) -> PureState:
    """Holland-Burnett state sum_n A_n |2n, 2N-2n> with the phase carried by mode 0."""
    if N < 1:
        raise ValueError(f"HB(N) requires N >= 1, got {N}")
    amps = {(2 * n, 2 * N - 2 * n): hb_amplitude(N, n, phi) for n in range(N + 1)}
    return build_state(2, 2 * N, amps)


def _check_mode(state: PureState, mode: int):
    if not 0 <= mode < state.num_modes:
        raise IndexError(f"mode {mode} out of range for {state.num_modes}-mode state")


def number_derivative(state: PureState, mode: int) -> PureState:
    """Multiply each amplitude by i*n_mode, i.e. d/dphi for a phase exp(i phi n_mode)."""
    _check_mode(state, mode)
    amps = {k: 1j * k[mode] * v for k, v in state.amplitudes.items()}
    return build_state(state.num_modes, state.cutoff, amps, normalized=False)


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.num_modes != b.num_modes:
        raise ValueError(f"mode-count mismatch: {a.num_modes} vs {b.num_modes}")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    terms = []
    for label in small.amplitudes:
        if label in large.amplitudes:
            terms.append(a.amplitudes[label].conjugate() * b.amplitudes[label])
    re = math.fsum(t.real for t in terms)
    im = math.fsum(t.imag for t in terms)
    return complex(re, im)


def prune(state: PureState, tol: float = PRUNE_TOL) -> PureState:
    return build_state(state.num_modes, state.cutoff, state.amplitudes,
                       normalized=state.normalized, prune=tol)


@dataclass(frozen=True)
class DensityOperator:
    """Matrix over an explicit, lexicographically ordered list of labels.

    With ``derivative=True`` the matrix is a phase derivative of a density
    operator: Hermitian and traceless rather than unit trace and positive.
    """

    basis: tuple[Label, ...]
    matrix: np.ndarray
    derivative: bool = False
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        basis = tuple(tuple(int(k) for k in lab) for lab in self.basis)
        if list(basis) != sorted(set(basis)):
            raise ValueError("basis must be sorted lexicographically without repeats")
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (len(basis), len(basis)):
            raise ValueError(f"matrix shape {mat.shape} does not match basis size {len(basis)}")
        mat.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(basis)})
        if len(basis) == 0:
            return
        if np.max(np.abs(mat - mat.conj().T)) > NORM_TOL:
            raise ValueError("operator is not Hermitian")
        tr = np.trace(mat).real
        if self.derivative:
            if abs(tr) > 1e-10:
                raise ValueError(f"derivative operator has trace {tr!r}")
        else:
            if abs(tr - 1.0) > NORM_TOL:
                raise ValueError(f"density operator has trace {tr!r}")
            if np.linalg.eigvalsh(mat).min() < -1e-10:
                raise ValueError("density operator has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, label: Iterable[int]) -> int:
        return self._index[tuple(label)]

    def element(self, bra: Iterable[int], ket: Iterable[int]) -> complex:
        i = self._index.get(tuple(bra))
        j = self._index.get(tuple(ket))
        if i is None or j is None:
            return 0j
        return complex(self.matrix[i, j])

    def embed(self, basis: Sequence[Label]) -> np.ndarray:
        """The matrix re-expressed on a larger sorted basis (zero-padded)."""
        out = np.zeros((len(basis), len(basis)), dtype=complex)
        pos = {lab: i for i, lab in enumerate(basis)}
        idx = np.array([pos[lab] for lab in self.basis], dtype=int)
        out[np.ix_(idx, idx)] = self.matrix
        return out


def _vector(state: PureState, basis: Sequence[Label]) -> np.ndarray:
    pos = {lab: i for i, lab in enumerate(basis)}
    vec = np.zeros(len(basis), dtype=complex)
    for lab, amp in state.amplitudes.items():
        vec[pos[lab]] = amp
    return vec


def to_density(state: PureState) -> DensityOperator:
    basis = tuple(state.labels())
    vec = _vector(state, basis)
    return DensityOperator(basis, np.outer(vec, vec.conj()))


def mix(components: Sequence[tuple[float, DensityOperator]]) -> DensityOperator:
    """Convex combination of density operators on the union of their bases."""
    weights = [w for w, _ in components]
    if any(w < 0 for w in weights):
        raise ValueError("mixture weights must be non-negative")
    if abs(math.fsum(weights) - 1.0) > 1e-10:
        raise ValueError(f"mixture weights sum to {math.fsum(weights)!r}, not 1")
    basis = tuple(sorted({lab for _, rho in components for lab in rho.basis}))
    mat = np.zeros((len(basis), len(basis)), dtype=complex)
    for w, rho in components:
        mat += w * rho.embed(basis)
    return DensityOperator(basis, mat)


@dataclass(frozen=True)
class Block:
    weight: float
    state: PureState
    lost: int


@dataclass(frozen=True)
class BlockDiagonalState:
    """Mixture sum_m weight_m |psi_m><psi_m| labelled by the number m of lost photons."""

    blocks: tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        total = math.fsum(b.weight for b in blocks)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"block weights sum to {total!r}")
        lost = [b.lost for b in blocks]
        if len(set(lost)) != len(lost):
            raise ValueError("lost-photon labels must be distinct")
        for b in blocks:
            if not 0.0 <= b.weight <= 1.0 + NORM_TOL:
                raise ValueError(f"block weight {b.weight!r} outside [0, 1]")
            if not b.state.normalized:
                raise ValueError("block states must be normalized")
            if b.lost < 0:
                raise ValueError("lost-photon count must be non-negative")

    def weights(self) -> dict[int, float]:
        return {b.lost: b.weight for b in self.blocks}

    def block(self, lost: int) -> Block:
        for b in self.blocks:
            if b.lost == lost:
                return b
        raise KeyError(lost)

    def to_density(self) -> DensityOperator:
        basis = tuple(sorted({lab for b in self.blocks for lab in b.state.amplitudes}))
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for b in self.blocks:
            vec = _vector(b.state, basis)
            mat += b.weight * np.outer(vec, vec.conj())
        return DensityOperator(basis, mat)
