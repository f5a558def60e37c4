"""Printed closed-form outcome tables for HB(1) and HB(2) and their comparison with the simulation.

The HB(2) table is transcribed term by term, including entries that do not
agree with the simulated interferometer; ``p2_discrepancy_report`` measures
the disagreement rather than correcting it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from fisherlab.optics import PipelineConfig
from fisherlab.pipeline import run_pipeline


@dataclass(frozen=True)
class ClosedFormMatrix:
    N: int
    entries: Mapping[tuple[int, int], float]

    def __post_init__(self):
        full = {}
        for (m, n), v in self.entries.items():
            full[(m, n)] = v
            full[(n, m)] = v
        for m in range(2 * self.N + 1):
            for n in range(2 * self.N + 1 - m):
                full.setdefault((m, n), 0.0)
        object.__setattr__(self, "entries", MappingProxyType(full))

    def __getitem__(self, key):
        m, n = key
        if m + n > 2 * self.N:
            return 0.0
        return self.entries[(m, n)]

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def as_array(self) -> np.ndarray:
        size = 2 * self.N + 1
        out = np.zeros((size, size))
        for (m, n), v in self.entries.items():
            out[m, n] = v
        return out


def closed_form_P1(phi: float, eta_p: float, eta: float, eta_d: float) -> ClosedFormMatrix:
    x = eta_p * eta_d
    c2 = math.cos(2 * phi)
    e = {
        (0, 0): 1 - (1 + eta) * x + (1 + eta**2) / 2 * x**2,
        (0, 1): (1 + eta) / 2 * x - (1 + eta**2) / 2 * x**2,
        (0, 2): (1 + eta**2 - 2 * eta * c2) / 8 * x**2,
        (1, 1): (1 + eta**2 + 2 * eta * c2) / 4 * x**2,
    }
    return ClosedFormMatrix(1, e)


def closed_form_P2(phi: float, eta_p: float, eta: float, eta_d: float) -> ClosedFormMatrix:
    """HB(2) outcome table exactly as printed (suspect terms kept)."""
    x = eta_p * eta_d
    c2 = math.cos(2 * phi)
    c4 = math.cos(4 * phi)
    h = eta
    e = {
        (0, 0): (1 - 2 * (1 + h) * x + (5 + 2 * h + 5 * h**2) / 2 * x**2
                 - (3 + h + h**2 + 3 * h**3) / 2 * x**3
                 + (3 + 3 * h**2 + 2 * h**4) / 8 * x**4),
        (0, 1): ((1 + h) * x - (5 + 2 * h + 5 * h**2) / 2 * x**2
                 + (3 + h + h**2 + 3 * h**3) / 4 * x**3
                 - (3 + 3 * h**2 + 2 * h**4) / 4 * x**4),
        (0, 2): ((5 + (4 - 6 * c2) * h + 5 * h**2) / 8 * x**2
                 - (9 + (5 - 6 * c2) * h * (1 + h) + 9 * h**3) / 8 * x**3
                 - (9 + 10 * h**2 + 9 * h**4 - 6 * h * (1 + h**2) * c2) / 16 * x**4),
        (0, 3): (3 * (1 + h) * (1 + h**2 - 2 * h * c2) / 16 * x**3
                 - 3 * (1 + h**2) * (1 + h**2 - 2 * h * c2) / 16 * x**4),
        (0, 4): 3 / 128 * (1 + h) * (1 + h**2 - 2 * h * c2) ** 2 * x**4,
        (1, 1): ((5 + 6 * c2 * h + 5 * h**2) / 8 * x**2
                 - (9 + (1 + 6 * c2) * h * (1 + h) + 9 * h**3) / 8 * x**3
                 - (9 + 2 * h**2 + 9 * h**4 + 6 * h * (1 + h**2) * c2) / 16 * x**4),
        (1, 2): ((9 + h + h**2 + 9 * h**3 + 6 * h * (1 + h) * c2) / 16 * x**3
                 + (9 + 2 * h**2 + 9 * h**4 + 6 * h * (1 + h**2) * c2) / 16 * x**4),
        (1, 3): 3 / 32 * (1 + h**4 - 2 * h * c2) * x**4,
        (2, 2): (9 + 4 * h**2 + 9 * h**4 + 12 * (h + h**3) * c2 + 18 * h**2 * c4) / 64 * x**4,
    }
    return ClosedFormMatrix(2, e)


def closed_form_F1(phi: float, eta_p: float, eta: float, eta_d: float) -> float:
    """CFI of the HB(1) interferometer; its maximum over phi is at pi/4."""
    num = 8 * eta_p**2 * eta_d**2 * eta**2 * (1 + eta**2) * math.sin(2 * phi) ** 2
    return num / (1 + eta**4 - 2 * eta**2 * math.cos(4 * phi))


def closed_form_F1_max(eta_p: float, eta: float, eta_d: float) -> float:
    return 8 * eta_p**2 * eta_d**2 * eta**2 / (1 + eta**2)


def closed_form_cfi(table, phi: float, eta_p: float, eta: float, eta_d: float,
                    h: float = 1e-6) -> float:
    """CFI of a closed-form table with central-difference phase derivatives.

    Negative printed probabilities are kept; outcomes with p <= 0 are skipped.
    """
    mid = table(phi, eta_p, eta, eta_d).as_array()
    dp = (table(phi + h, eta_p, eta, eta_d).as_array()
          - table(phi - h, eta_p, eta, eta_d).as_array()) / (2 * h)
    ok = mid > 1e-12
    return float(np.sum(dp[ok] ** 2 / mid[ok]))


@dataclass(frozen=True)
class EntryDiscrepancy:
    key: tuple[int, int]
    max_abs_error: float
    worst_point: tuple[float, float, float, float]


@dataclass(frozen=True)
class DiscrepancyReport:
    points: int
    entries: tuple[EntryDiscrepancy, ...]
    max_table_norm_error: float
    max_pipeline_norm_error: float

    def failing(self, tol: float = 1e-12) -> list[EntryDiscrepancy]:
        return [e for e in self.entries if e.max_abs_error > tol]

    def lines(self, tol: float = 1e-12) -> list[str]:
        out = [f"P2 report over {self.points} parameter points"]
        for e in self.entries:
            flag = "MISMATCH" if e.max_abs_error > tol else "ok"
            phi, ep, eta, ed = e.worst_point
            out.append(f"  p{e.key[0]}{e.key[1]}: max |closed - pipeline| = {e.max_abs_error:.3e} "
                       f"[{flag}] at phi={phi:.4f} eta_p={ep:.3f} eta={eta:.3f} eta_d={ed:.3f}")
        out.append(f"  closed-form table: max |sum p - 1| = {self.max_table_norm_error:.3e}")
        out.append(f"  pipeline: max |sum p - 1| = {self.max_pipeline_norm_error:.3e}")
        return out


def default_p2_grid() -> list[tuple[float, float, float, float]]:
    phis = (0.1, 0.4, math.pi / 4, 1.2)
    effs = (0.5, 0.8, 1.0)
    etas = (0.3, 0.7, 1.0)
    return [(phi, ep, eta, ed) for phi in phis for ep in effs for eta in etas for ed in effs]


def p2_discrepancy_report(points: Iterable[tuple[float, float, float, float]] | None = None
                          ) -> DiscrepancyReport:
    """Entrywise comparison of the printed HB(2) table with the simulated distribution.

    Only the independent entries m <= n are listed.
    """
    points = default_p2_grid() if points is None else list(points)
    keys = [(m, n) for m in range(5) for n in range(m, 5 - m)]
    worst = {k: (0.0, points[0]) for k in keys}
    table_norm = pipe_norm = 0.0
    for pt in points:
        phi, ep, eta, ed = pt
        table = closed_form_P2(phi, ep, eta, ed)
        dist = run_pipeline(PipelineConfig(2, phi, ep, eta, ed))
        table_norm = max(table_norm, abs(table.total() - 1.0))
        pipe_norm = max(pipe_norm, abs(math.fsum(dist.probs.values()) - 1.0))
        for k in keys:
            err = abs(table[k] - dist.probs[k])
            if err > worst[k][0]:
                worst[k] = (err, pt)
    entries = tuple(EntryDiscrepancy(k, worst[k][0], worst[k][1]) for k in keys)
    return DiscrepancyReport(len(points), entries, table_norm, pipe_norm)
