"""Benchmarks against the standard quantum limit: advantage ratios, thresholds,
feasibility regions and lossy-probe comparison curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from fisherlab.fisher import block_derivative_density, qfi_block, qfi_general
from fisherlab.fock import PureState, build_state, hb_state
from fisherlab.optics import phase_loss_blocks
from fisherlab.pipeline import PHASE_STEP, PHASE_TOL, compiled_pipeline
from fisherlab.search import NoCrossingError, bisect_threshold

AXES = ("eta_p", "eta", "eta_d")


def sql(k: int, eta: float, eta_d: float) -> float:
    """Fisher information of a classical probe with 2k photons: 2 k eta eta_d."""
    return 2.0 * k * eta * eta_d


@dataclass(frozen=True)
class AdvantageResult:
    k: int
    eta_p: float
    eta: float
    eta_d: float
    best_phase: float
    F_best: float
    F_SQL: float
    ratio: float


def _ratio(F: float, F_sql: float) -> float:
    # with no transmitted light neither probe carries phase information
    return F / F_sql if F_sql > 0 else 0.0


def advantage_ratio(k: int, eta_p: float, eta: float, eta_d: float,
                    step: float = PHASE_STEP, tol: float = PHASE_TOL) -> AdvantageResult:
    """Best CFI of HB(k) over phi in (0, pi/2), relative to the SQL."""
    if not 1 <= k <= 6:
        raise ValueError(f"k must lie in 1..6, got {k}")
    phase, F = compiled_pipeline(k, float(eta)).max_fisher([eta_p], [eta_d], step, tol)
    F_sql = sql(k, eta, eta_d)
    return AdvantageResult(k, eta_p, eta, eta_d, float(phase[0]), float(F[0]), F_sql,
                           _ratio(float(F[0]), F_sql))


def threshold_search(k: int, axis: str, eta_p: float = 1.0, eta: float = 1.0, eta_d: float = 1.0,
                     tol: float = 1e-4, step: float = PHASE_STEP) -> float:
    """Smallest value on ``axis`` with ratio >= 1, the other two efficiencies fixed.

    Raises NoCrossingError when the ratio stays below 1 over the whole axis.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    fixed = {"eta_p": eta_p, "eta": eta, "eta_d": eta_d}

    def feasible(x: float) -> bool:
        params = dict(fixed, **{axis: x})
        return advantage_ratio(k, **params, step=step).ratio >= 1.0

    try:
        return bisect_threshold(feasible, 0.0, 1.0, tol)
    except NoCrossingError as exc:
        raise NoCrossingError(f"HB({k}) never beats the SQL along {axis} with {fixed}") from exc


@dataclass(frozen=True)
class FeasibilityGrid:
    k: int
    eta_p: np.ndarray
    eta: np.ndarray
    eta_d: np.ndarray
    ratio: np.ndarray  # indexed [eta_p, eta, eta_d]

    @property
    def feasible(self) -> np.ndarray:
        return self.ratio >= 1.0

    def monotonicity_violations(self, tol: float = 1e-9) -> int:
        """Cells where raising one efficiency by a grid step lowers the ratio by more than tol."""
        bad = 0
        for ax in range(3):
            bad += int(np.sum(np.diff(self.ratio, axis=ax) < -tol))
        return bad

    def rows(self):
        for i, ep in enumerate(self.eta_p):
            for j, e in enumerate(self.eta):
                for l, ed in enumerate(self.eta_d):
                    r = float(self.ratio[i, j, l])
                    yield float(ep), float(e), float(ed), r, r >= 1.0


def ratio_grid(k: int, eta_p: Sequence[float], eta: Sequence[float], eta_d: Sequence[float],
               step: float = PHASE_STEP, tol: float = PHASE_TOL, chunk: int = 2048) -> np.ndarray:
    """Advantage ratio on an arbitrary product grid, indexed [eta_p, eta, eta_d]."""
    ep = np.asarray(eta_p, dtype=float)
    ed = np.asarray(eta_d, dtype=float)
    out = np.zeros((ep.size, len(eta), ed.size))
    P, D = np.meshgrid(ep, ed, indexing="ij")
    P, D = P.ravel(), D.ravel()
    for j, e in enumerate(eta):
        e = float(e)
        F_sql = sql(k, e, D)
        if e == 0.0:
            continue
        cp = compiled_pipeline(k, e)
        F = np.empty(P.size)
        for s in range(0, P.size, chunk):
            _, F[s:s + chunk] = cp.max_fisher(P[s:s + chunk], D[s:s + chunk], step, tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(F_sql > 0, F / np.where(F_sql > 0, F_sql, 1.0), 0.0)
        out[:, j, :] = r.reshape(ep.size, ed.size)
    return out


def feasibility_grid(k: int, resolution: int = 21, step: float = PHASE_STEP) -> FeasibilityGrid:
    if not 2 <= resolution <= 101:
        raise ValueError("resolution must lie in 2..101")
    axis = np.linspace(0.0, 1.0, resolution)
    return FeasibilityGrid(k, axis, axis, axis, ratio_grid(k, axis, axis, axis, step))


# Lossy-probe comparison curves

def lossy_qfi(state: PureState, eta: float, engine: str = "block") -> float:
    """QFI after a phase and loss eta on mode 0 of ``state``."""
    blocks, derivs = phase_loss_blocks(state, eta)
    if engine == "block":
        return qfi_block(blocks, derivs)
    if engine == "general":
        return qfi_general(blocks.to_density(), block_derivative_density(blocks, derivs))
    raise ValueError(f"unknown engine {engine!r}")


def hb_lossy_qfi_curve(N: int, etas: Sequence[float]) -> list[float]:
    if not 1 <= N <= 10:
        raise ValueError("N must lie in 1..10")
    state = hb_state(N)
    return [lossy_qfi(state, float(e)) for e in etas]


def noon_state(total: int) -> PureState:
    if total < 1:
        raise ValueError("N00N state needs at least one photon")
    r = 1 / math.sqrt(2)
    return build_state(2, total, {(total, 0): r, (0, total): r})


def noon_lossy_qfi(total: int, eta: float) -> float:
    return lossy_qfi(noon_state(total), eta, engine="general")


def sql_crossing(N: int, lo: float = 1e-3, hi: float = 1.0) -> float:
    """Transmissivity where the lossy HB(N) QFI meets the line 2 N eta."""
    state = hb_state(N)
    return brentq(lambda e: lossy_qfi(state, e) - 2 * N * e, lo, hi, xtol=1e-12)


def _loss_matrix(M: int, eta: float) -> np.ndarray:
    """L[m, k] = probability that m of k photons are lost."""
    L = np.zeros((M + 1, M + 1))
    for k in range(M + 1):
        for m in range(k + 1):
            L[m, k] = math.comb(k, m) * eta ** (k - m) * (1 - eta) ** m
    return L


def probe_qfi_from_weights(weights: np.ndarray, eta: float, L: np.ndarray | None = None) -> float:
    """QFI of sum_k sqrt(w_k) |k, M-k> after phase and loss on mode 0.

    Vectorized block formula; the loss blocks differ in total photon number
    so the state is block diagonal.
    """
    w = np.asarray(weights, dtype=float)
    M = w.size - 1
    L = _loss_matrix(M, eta) if L is None else L
    k = np.arange(M + 1)
    norm = L @ w
    mean = L @ (k * w)
    sq = L @ (k * k * w)
    ok = norm > 0
    return max(4.0 * float(np.sum(sq[ok] - mean[ok] ** 2 / norm[ok])), 0.0)


def probe_state(coeffs: Sequence[complex]) -> PureState:
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    M = c.size - 1
    return build_state(2, M, {(k, M - k): c[k] for k in range(M + 1)})


@dataclass(frozen=True)
class ProbeOptimum:
    total_photons: int
    eta: float
    coefficients: np.ndarray
    qfi: float
    start_values: np.ndarray
    complex_gain: float

    @property
    def spread(self) -> float:
        return float(self.start_values.max() - self.start_values.min())


def optimal_probe_qfi(M: int, eta: float, starts: int = 20, seed: int = 0,
                      budget: int = 100) -> ProbeOptimum:
    """Maximize the lossy QFI over real inputs sum_k a_k |k, M-k> on the unit sphere.

    Each start (seeded by ``(seed, index)``) runs Nelder-Mead on a = x/|x| with
    ``budget * (M + 1)`` evaluations; a penalty (|x|^2 - 1)^2 removes the flat
    radial direction. The best start is then polished until restarts stop
    improving. ``start_values`` holds the per-start results before polishing.
    The reported QFI is recomputed with the eigendecomposition engine;
    ``complex_gain`` is the largest change produced by random complex phase
    perturbations of the optimum (expected <= 0).
    """
    if not 1 <= M <= 20:
        raise ValueError("M must lie in 1..20")
    if starts < 1:
        raise ValueError("need at least one start")
    L = _loss_matrix(M, eta)

    def objective(x):
        n = x @ x
        if n == 0:
            return 0.0
        return -probe_qfi_from_weights(x * x / n, eta, L) + (n - 1.0) ** 2

    best, values = None, []
    for s in range(starts):
        rng = np.random.default_rng([seed, s])
        x0 = rng.normal(size=M + 1)
        res = minimize(objective, x0 / np.linalg.norm(x0), method="Nelder-Mead",
                       options={"maxfev": budget * (M + 1), "xatol": 1e-9, "fatol": 1e-14,
                                "adaptive": True})
        values.append(-res.fun)
        if best is None or res.fun < best.fun:
            best = res
    x, prev = best.x, best.fun
    for _ in range(20):
        res = minimize(objective, x, method="Nelder-Mead",
                       options={"maxfev": 2000 * (M + 1), "xatol": 1e-10, "fatol": 1e-15,
                                "adaptive": True})
        x = res.x
        if prev - res.fun < 1e-13:
            break
        prev = res.fun
    a = x / np.linalg.norm(x)
    a = a * np.sign(a[np.argmax(np.abs(a))])
    state = probe_state(a)
    qfi = lossy_qfi(state, eta, engine="general")
    rng = np.random.default_rng([seed, starts])
    gain = -np.inf
    for _ in range(8):
        phases = np.exp(1j * rng.uniform(-0.1, 0.1, size=M + 1))
        gain = max(gain, lossy_qfi(probe_state(a * phases), eta, engine="general") - qfi)
    return ProbeOptimum(M, eta, a, qfi, np.array(values), float(gain))
