"""End-to-end twin-Fock interferometer simulation and its lossless closed forms.

``run_pipeline`` is the reference path built from explicit Fock-state
operations. ``CompiledPipeline`` expands the same outcome probabilities as
trigonometric polynomials in the phase so parameter grids can be evaluated
in bulk; it is checked against ``run_pipeline`` in the test suite.
"""

from __future__ import annotations

import math
from collections import defaultdict
from functools import lru_cache

import numpy as np

from fisherlab.fisher import (
    PhotonNumberDistribution,
    SingularityError,
    cfi_terms,
)
from fisherlab.fock import PureState, build_state, fock_state, number_derivative
from fisherlab.legendre import assoc_legendre, legendre
from fisherlab.optics import (
    BeamSplitter,
    LossChannel,
    PipelineConfig,
    apply_beamsplitter,
    apply_phase,
    binomial_pmf,
    detector_smearing,
    loss_kraus,
    smearing_matrix,
)
from fisherlab.search import golden_section_max

PHASE_STEP = math.pi / 200
PHASE_TOL = 1e-10


def _outcome_keys(N: int) -> list[tuple[int, int]]:
    return [(m, n) for m in range(2 * N + 1) for n in range(2 * N + 1 - m)]


def _ancilla_marginal(out: PureState, dout: PureState, eta_d: float):
    """Detector losses as explicit beam splitters onto vacuum ancillas p', q'."""
    def widen(s: PureState) -> PureState:
        amps = {lab + (0, 0): a for lab, a in s.amplitudes.items()}
        return build_state(4, s.cutoff, amps, normalized=False)

    state, deriv = widen(out), widen(dout)
    for pair in ((0, 2), (1, 3)):
        bs = BeamSplitter.from_transmissivity(eta_d, pair)
        state = apply_beamsplitter(state, bs)
        deriv = apply_beamsplitter(deriv, bs)
    p = defaultdict(float)
    dp = defaultdict(float)
    for lab, a in state.amplitudes.items():
        da = deriv[lab]
        p[lab[:2]] += abs(a) ** 2
        dp[lab[:2]] += 2.0 * (a.conjugate() * da).real
    return p, dp


def run_pipeline(config: PipelineConfig, detectors: str = "smearing") -> PhotonNumberDistribution:
    """Joint photon-count distribution at the two detectors, with d/dphi.

    ``detectors="ancilla"`` models detector inefficiency with explicit
    ancilla modes instead of binomial smearing (validation path).
    """
    if detectors not in ("smearing", "ancilla"):
        raise ValueError(f"unknown detector model {detectors!r}")
    N, cfg = config.N, config
    channel = LossChannel(cfg.eta, 0)
    probs = defaultdict(float)
    derivs = defaultdict(float)
    for n_a in range(N + 1):
        w_a = binomial_pmf(N, n_a, cfg.eta_p)
        for n_b in range(N + 1):
            w = w_a * binomial_pmf(N, n_b, cfg.eta_p)
            if w == 0.0:
                continue
            psi = apply_beamsplitter(fock_state((n_a, n_b), cutoff=2 * N), cfg.bs1)
            psi = apply_phase(psi, 0, cfg.phi)
            dpsi = number_derivative(psi, 0)
            for lost in range(n_a + n_b + 1):
                out = apply_beamsplitter(loss_kraus(psi, channel, lost), cfg.bs2)
                if len(out) == 0:
                    continue
                dout = apply_beamsplitter(loss_kraus(dpsi, channel, lost), cfg.bs2)
                if detectors == "ancilla":
                    p, dp = _ancilla_marginal(out, dout, cfg.eta_d)
                else:
                    p = {lab: abs(a) ** 2 for lab, a in out.amplitudes.items()}
                    dp = {lab: 2.0 * (a.conjugate() * dout[lab]).real
                          for lab, a in out.amplitudes.items()}
                for key, v in p.items():
                    probs[key] += w * v
                    derivs[key] += w * dp[key]
    keys = _outcome_keys(N)
    dist = PhotonNumberDistribution(
        {k: probs.get(k, 0.0) for k in keys},
        {k: derivs.get(k, 0.0) for k in keys},
        cfg.phi,
    )
    if detectors == "smearing":
        dist = detector_smearing(dist, cfg.eta_d)
    return dist


class CompiledPipeline:
    """Phase-Fourier expansion of the outcome probabilities at fixed N and eta.

    For preparation branch b the count distribution before detection is
    P_b(phi) = sum_k R[b, :, :, k] exp(i (k - 2N) phi). Preparation weights
    and detector smearing are linear in P and are applied to the
    coefficients, so one compilation serves any (phi, eta_p, eta_d).
    """

    def __init__(self, N: int, eta: float, bs1: BeamSplitter | None = None,
                 bs2: BeamSplitter | None = None):
        bs1 = BeamSplitter.balanced() if bs1 is None else bs1
        bs2 = BeamSplitter.balanced() if bs2 is None else bs2
        PipelineConfig(N, eta=eta, bs1=bs1, bs2=bs2)  # validation only
        self.N, self.eta = N, eta
        D = 2 * N + 1
        self.size = D
        self.branches = [(a, b) for a in range(N + 1) for b in range(N + 1)]
        channel = LossChannel(eta, 0)
        K = np.zeros((len(self.branches), D, D, D, D), dtype=complex)  # b, lost, p, q, j
        for bi, (n_a, n_b) in enumerate(self.branches):
            psi = apply_beamsplitter(fock_state((n_a, n_b), cutoff=2 * N), bs1)
            for j in range(n_a + n_b + 1):
                part = {lab: a for lab, a in psi.amplitudes.items() if lab[0] == j}
                if not part:
                    continue
                comp = build_state(2, 2 * N, part, normalized=False)
                for lost in range(j + 1):
                    out = apply_beamsplitter(loss_kraus(comp, channel, lost), bs2)
                    for (p, q), a in out.amplitudes.items():
                        K[bi, lost, p, q, j] += a
        R = np.zeros((len(self.branches), D, D, 2 * D - 1), dtype=complex)
        for j in range(D):
            for k in range(D):
                R[..., j - k + D - 1] += np.einsum("bmpq,bmpq->bpq", K[..., j], K[..., k].conj())
        self.K = K
        self.R = R
        self.freqs = np.arange(-(D - 1), D)

    def branch_weights(self, eta_p) -> np.ndarray:
        eta_p = np.atleast_1d(np.asarray(eta_p, dtype=float))
        N = self.N
        cols = []
        for n_a, n_b in self.branches:
            c = math.comb(N, n_a) * math.comb(N, n_b)
            cols.append(c * eta_p ** (n_a + n_b) * (1.0 - eta_p) ** (2 * N - n_a - n_b))
        return np.stack(cols, axis=-1)

    def coefficients(self, eta_p, eta_d) -> np.ndarray:
        """Fourier coefficients per cell, shape (C, D, D, 2D-1)."""
        eta_p, eta_d = np.broadcast_arrays(np.atleast_1d(np.asarray(eta_p, float)),
                                           np.atleast_1d(np.asarray(eta_d, float)))
        T = np.einsum("cb,bpqk->cpqk", self.branch_weights(eta_p), self.R)
        S = np.stack([smearing_matrix(self.size, e) for e in eta_d])
        return np.einsum("cxp,cpqk,cyq->cxyk", S, T, S)

    def evaluate(self, coeffs: np.ndarray, phi) -> tuple[np.ndarray, np.ndarray]:
        """Probabilities and derivatives at phases ``phi`` of shape (C, G)."""
        phi = np.asarray(phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[:, None]
        E = np.exp(1j * phi[..., None] * self.freqs)
        P = np.einsum("cxyk,cgk->cgxy", coeffs, E).real
        dP = np.einsum("cxyk,cgk->cgxy", coeffs, 1j * self.freqs * E).real
        return P, dP

    def fisher_from(self, coeffs: np.ndarray, phi) -> np.ndarray:
        """CFI per (cell, phase); NaN where an outcome is singular."""
        P, dP = self.evaluate(coeffs, phi)
        terms, singular = cfi_terms(P, dP)
        F = terms.sum(axis=(-2, -1))
        return np.where(singular.any(axis=(-2, -1)), np.nan, F)

    def fisher(self, phi, eta_p=1.0, eta_d=1.0) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        coeffs = self.coefficients(eta_p, eta_d)
        return self.fisher_from(coeffs, np.broadcast_to(phi, (coeffs.shape[0],) + phi.shape))

    def distribution(self, phi: float, eta_p: float = 1.0, eta_d: float = 1.0) -> PhotonNumberDistribution:
        P, dP = self.evaluate(self.coefficients(eta_p, eta_d), np.array([[phi]]))
        keys = _outcome_keys(self.N)
        return PhotonNumberDistribution({k: float(P[0, 0][k]) for k in keys},
                                        {k: float(dP[0, 0][k]) for k in keys}, phi)

    def fisher_from_amplitudes(self, phi, eta_p, eta_d, max_elements: int = 2_000_000) -> np.ndarray:
        """CFI per cell at one phase per cell, built from amplitudes.

        Probabilities are sums of |amplitude|^2, so small probabilities keep
        their relative accuracy; the Fourier form loses it to cancellation
        near dark fringes. NaN where an outcome is singular.
        """
        phi, eta_p, eta_d = np.broadcast_arrays(np.atleast_1d(np.asarray(phi, float)),
                                                np.atleast_1d(np.asarray(eta_p, float)),
                                                np.atleast_1d(np.asarray(eta_d, float)))
        j = np.arange(self.size)
        W = self.branch_weights(eta_p)
        out = np.empty(phi.size)
        chunk = max(1, max_elements // self.K[..., 0].size)
        for s in range(0, phi.size, chunk):
            sl = slice(s, s + chunk)
            E = np.exp(1j * phi[sl, None] * j)
            A = np.einsum("bmpqj,cj->cbmpq", self.K, E)
            dA = np.einsum("bmpqj,cj->cbmpq", self.K, 1j * j * E)
            P = np.einsum("cb,cbmpq->cpq", W[sl], np.abs(A) ** 2)
            dP = np.einsum("cb,cbmpq->cpq", W[sl], 2.0 * (A.conj() * dA).real)
            S = np.stack([smearing_matrix(self.size, e) for e in eta_d[sl]])
            P = np.einsum("cxp,cpq,cyq->cxy", S, P, S)
            dP = np.einsum("cxp,cpq,cyq->cxy", S, dP, S)
            terms, singular = cfi_terms(P, dP)
            out[sl] = np.where(singular.any(axis=(-2, -1)), np.nan, terms.sum(axis=(-2, -1)))
        return out

    def max_fisher(self, eta_p, eta_d, step: float = PHASE_STEP, tol: float = PHASE_TOL):
        """Maximize the CFI over phi in (0, pi/2) per cell: grid, then golden section.

        The search runs on the Fourier form; the value at the chosen phase is
        recomputed from amplitudes. Returns (best_phase, best_F) arrays of shape (C,).
        """
        coeffs = self.coefficients(eta_p, eta_d)
        C = coeffs.shape[0]
        count = int(round((math.pi / 2) / step))
        grid = step * np.arange(1, count)
        F = self.fisher_from(coeffs, np.broadcast_to(grid, (C, grid.size)))
        F = np.where(np.isnan(F), -np.inf, F)
        best = np.argmax(F, axis=1)
        lo = grid[best] - step
        hi = np.minimum(grid[best] + step, math.pi / 2)
        x, fx = golden_section_max(lambda ph: self.fisher_from(coeffs, ph)[:, 0], lo, hi, tol)
        coarse = F[np.arange(C), best]
        phase = np.where(coarse > fx, grid[best], x)
        value = self.fisher_from_amplitudes(phase, eta_p, eta_d)
        # fall back to the search value if the chosen phase sits on a singular outcome
        value = np.where(np.isnan(value), np.maximum(coarse, fx), value)
        return phase, value


@lru_cache(maxsize=64)
def compiled_pipeline(N: int, eta: float) -> CompiledPipeline:
    return CompiledPipeline(N, eta)


def lossless_distribution(N: int, phi: float) -> dict[int, float]:
    """p_n for |n>_p |2N-n>_q in the ideal interferometer, via associated Legendre functions."""
    if N < 1:
        raise ValueError("N must be >= 1")
    x = math.cos(phi)
    x = min(1.0, max(-1.0, x))
    out = {}
    for n in range(N + 1):
        ratio = math.factorial(n) / math.factorial(2 * N - n)
        out[n] = ratio * assoc_legendre(N, N - n, x) ** 2
    for n in range(N + 1, 2 * N + 1):
        out[n] = out[2 * N - n]
    return out


def parity_expectation(N: int, phi: float) -> float:
    """<Pi_N> = P_N(cos 2 phi)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return legendre(N, max(-1.0, min(1.0, math.cos(2 * phi))))


def single_outcome_fi(N: int, phi: float) -> float:
    """Fisher information of the binary test |N>_p|N>_q versus everything else.

    Uses p = P_N(cos phi)^2 and d/dphi P_N(cos phi) = P_N^1(cos phi).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    x = max(-1.0, min(1.0, math.cos(phi)))
    amp = legendre(N, x)
    p = amp * amp
    dp = 2.0 * amp * assoc_legendre(N, 1, x)
    denom = p * (1.0 - p)
    if denom <= 0.0:
        raise SingularityError(f"single-outcome probability is degenerate at phi={phi!r}")
    return dp * dp / denom
