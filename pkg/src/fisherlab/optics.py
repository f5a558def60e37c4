"""Beam splitters, phase shifts and photon-loss channels acting on Fock states."""

from __future__ import annotations

import math
from collections import defaultdict
import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from fisherlab.fock import (
    NORM_TOL,
    Block,
    BlockDiagonalState,
    DensityOperator,
    PureState,
    build_state,
    number_derivative,
    sqrt_factorial_ratio,
)
from fisherlab.fisher import PhotonNumberDistribution


def binomial_pmf(n: int, k: int, p: float) -> float:
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def _check_efficiency(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class BeamSplitter:
    """Two-mode linear element.

    ``matrix[i][j]`` is the coefficient of output creation operator j in the
    image of input creation operator i (modes ordered as ``mode_pair``).
    """

    theta: float
    mode_pair: tuple[int, int] = (0, 1)
    matrix: tuple[tuple[complex, complex], tuple[complex, complex]] = None

    def __post_init__(self):
        if self.matrix is None:
            c, s = math.cos(self.theta), math.sin(self.theta)
            mat = ((complex(c), 1j * s), (1j * s, complex(c)))
        else:
            mat = tuple(tuple(complex(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "mode_pair", tuple(int(m) for m in self.mode_pair))
        i, j = self.mode_pair
        if i == j or i < 0 or j < 0:
            raise ValueError(f"invalid mode pair {self.mode_pair}")
        u = np.array(mat)
        if np.max(np.abs(u @ u.conj().T - np.eye(2))) > NORM_TOL:
            raise ValueError("beam-splitter mode matrix is not unitary")
        if abs(abs(u[0, 0]) ** 2 - math.cos(self.theta) ** 2) > NORM_TOL:
            raise ValueError("mode matrix inconsistent with transmissivity cos^2(theta)")

    @property
    def transmissivity(self) -> float:
        return math.cos(self.theta) ** 2

    @classmethod
    def generator(cls, theta: float, mode_pair=(0, 1)) -> "BeamSplitter":
        """exp(i theta (a^dag b + a b^dag)): a^dag -> cos(theta) a^dag + i sin(theta) b^dag."""
        return cls(theta, mode_pair)

    @classmethod
    def from_transmissivity(cls, eta: float, mode_pair=(0, 1)) -> "BeamSplitter":
        _check_efficiency("transmissivity", eta)
        return cls.generator(math.acos(math.sqrt(eta)), mode_pair)

    @classmethod
    def balanced(cls, mode_pair=(0, 1)) -> "BeamSplitter":
        """50:50 splitter with sqrt2 a^dag -> c^dag + d^dag, sqrt2 b^dag -> c^dag - d^dag."""
        r = 1 / math.sqrt(2)
        return cls(math.pi / 4, mode_pair, ((r, r), (r, -r)))


@lru_cache(maxsize=4096)
def _split_table(n_i: int, n_j: int, mat) -> tuple[tuple[int, int, complex], ...]:
    """Image of |n_i, n_j> as (out_i, out_j, amplitude) triples."""
    (u00, u01), (u10, u11) = mat
    total = n_i + n_j
    acc = defaultdict(complex)
    for r in range(n_i + 1):
        cr = math.comb(n_i, r)
        for s in range(n_j + 1):
            k = r + s
            coeff = cr * math.comb(n_j, s) * sqrt_factorial_ratio((k, total - k), (n_i, n_j))
            acc[k] += coeff * u00**r * u01 ** (n_i - r) * u10**s * u11 ** (n_j - s)
    return tuple((k, total - k, v) for k, v in sorted(acc.items()))


def apply_beamsplitter(state: PureState, bs: BeamSplitter) -> PureState:
    i, j = bs.mode_pair
    if max(i, j) >= state.num_modes:
        raise IndexError(f"mode pair {bs.mode_pair} invalid for {state.num_modes} modes")
    out = defaultdict(complex)
    for label, amp in state.amplitudes.items():
        for k_i, k_j, c in _split_table(label[i], label[j], bs.matrix):
            new = list(label)
            new[i], new[j] = k_i, k_j
            out[tuple(new)] += c * amp
    return build_state(state.num_modes, state.cutoff, out, normalized=state.normalized)


def apply_phase(state: PureState, mode: int, phi: float) -> PureState:
    """exp(i phi n_mode) acting on the state."""
    if not 0 <= mode < state.num_modes:
        raise IndexError(f"mode {mode} out of range")
    amps = {k: v * complex(math.cos(phi * k[mode]), math.sin(phi * k[mode]))
            for k, v in state.amplitudes.items()}
    return build_state(state.num_modes, state.cutoff, amps, normalized=state.normalized)


@dataclass(frozen=True)
class LossChannel:
    """Pure loss on one mode: a^dag -> sqrt(eta) a^dag + sqrt(1-eta) e^dag, e discarded."""

    transmissivity: float
    target_mode: int = 0

    def __post_init__(self):
        _check_efficiency("transmissivity", self.transmissivity)


def loss_kraus(state: PureState, channel: LossChannel, lost: int) -> PureState:
    """Unnormalized image of the state when exactly ``lost`` photons go to the environment."""
    mode, eta = channel.target_mode, channel.transmissivity
    if not 0 <= mode < state.num_modes:
        raise IndexError(f"mode {mode} out of range")
    amps = {}
    for label, amp in state.amplitudes.items():
        n = label[mode]
        if n < lost:
            continue
        factor = math.sqrt(math.comb(n, lost) * eta ** (n - lost) * (1.0 - eta) ** lost)
        new = list(label)
        new[mode] = n - lost
        amps[tuple(new)] = amps.get(tuple(new), 0j) + factor * amp
    return build_state(state.num_modes, state.cutoff, amps, normalized=False)


def apply_loss_blocks(state: PureState, channel: LossChannel) -> BlockDiagonalState:
    blocks = []
    top = max((lab[channel.target_mode] for lab in state.amplitudes), default=0)
    for m in range(top + 1):
        img = loss_kraus(state, channel, m)
        w = img.norm_squared()
        if w <= 0.0:
            continue
        blocks.append(Block(w, img.scaled(1 / math.sqrt(w), normalized=True), m))
    return BlockDiagonalState(tuple(blocks))


def phase_loss_blocks(state: PureState, eta: float, phi: float = 0.0, mode: int = 0):
    """Phase on ``mode`` followed by loss on the same mode.

    Returns the block state and, per block, the phi-derivative of the
    normalized block vector. Block weights do not depend on phi because the
    phase is diagonal in photon number.
    """
    shifted = apply_phase(state, mode, phi)
    deriv = number_derivative(shifted, mode)
    channel = LossChannel(eta, mode)
    blocks = apply_loss_blocks(shifted, channel)
    derivs = [loss_kraus(deriv, channel, b.lost).scaled(1 / math.sqrt(b.weight))
              for b in blocks.blocks]
    return blocks, derivs


def binomial_preparation(N: int, eta_p: float) -> DensityOperator:
    """Single-mode |N> after a beam splitter of transmissivity eta_p."""
    if N < 0:
        raise ValueError("N must be non-negative")
    _check_efficiency("eta_p", eta_p)
    probs = [binomial_pmf(N, n, eta_p) for n in range(N + 1)]
    return DensityOperator(tuple((n,) for n in range(N + 1)), np.diag(probs))


def smearing_matrix(size: int, eta_d: float) -> np.ndarray:
    """S[k, n] = P(k detected | n incident) for an inefficient counter."""
    s = np.zeros((size, size))
    for n in range(size):
        for k in range(n + 1):
            s[k, n] = binomial_pmf(n, k, eta_d)
    return s


def detector_smearing(dist: PhotonNumberDistribution, eta_d: float) -> PhotonNumberDistribution:
    """Binomial thinning of both counters' photon numbers, applied to probabilities and derivatives."""
    _check_efficiency("eta_d", eta_d)
    if eta_d == 1.0:
        return dist
    size = dist.max_count() + 1
    s = smearing_matrix(size, eta_d)
    p, dp = dist.as_arrays(size)
    p2 = s @ p @ s.T
    dp2 = s @ dp @ s.T
    keys = sorted(set(dist.probs) | {(m, n) for m in range(size) for n in range(size)
                                     if m + n <= size - 1})
    return PhotonNumberDistribution(
        {k: float(p2[k]) for k in keys},
        {k: float(dp2[k]) for k in keys},
        dist.phase,
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Twin-Fock interferometer: preparation, BS1, phase, one-arm loss, BS2, detection.

    Two-mode slots: (a, b) -> BS1 -> (c, d); phase and loss act on c (-> f);
    BS2 maps (f, d) -> (p, q).
    """

    N: int
    phi: float = 0.0
    eta_p: float = 1.0
    eta: float = 1.0
    eta_d: float = 1.0
    bs1: BeamSplitter = field(default_factory=BeamSplitter.balanced)
    bs2: BeamSplitter = field(default_factory=BeamSplitter.balanced)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        for name in ("eta_p", "eta", "eta_d"):
            _check_efficiency(name, getattr(self, name))
        for bs in (self.bs1, self.bs2):
            if set(bs.mode_pair) != {0, 1}:
                raise ValueError("pipeline beam splitters must act on modes (0, 1)")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)
