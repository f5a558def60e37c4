"""Command-line front end: eval, sweep and validate."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

from fisherlab.bench import (
    AXES,
    advantage_ratio,
    feasibility_grid,
    lossy_qfi,
    noon_lossy_qfi,
    optimal_probe_qfi,
    sql,
    threshold_search,
)
from fisherlab.fisher import SingularityError, cfi
from fisherlab.fock import hb_state
from fisherlab.optics import PipelineConfig
from fisherlab.pipeline import parity_expectation, run_pipeline, single_outcome_fi
from fisherlab.search import NoCrossingError
from fisherlab.validate import run_validation

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

_DECIMAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)")
_INTEGER = re.compile(r"[+-]?\d+")


def decimal(text: str) -> float:
    """Plain decimal notation only: no exponents, inf or nan."""
    if not _DECIMAL.fullmatch(text.strip()):
        raise argparse.ArgumentTypeError(f"expected a decimal number, got {text!r}")
    return float(text)


def integer(text: str) -> int:
    if not _INTEGER.fullmatch(text.strip()):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(text)


def efficiency(text: str) -> float:
    x = decimal(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"efficiency must lie in [0, 1], got {text!r}")
    return x


def _grid(text: str, conv) -> list:
    """Comma list ``a,b,c`` or inclusive range ``start:stop:count``; empty text gives an empty grid."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range must be start:stop:count, got {text!r}")
        lo, hi = decimal(parts[0]), decimal(parts[1])
        count = integer(parts[2])
        if count < 0:
            raise argparse.ArgumentTypeError("range count must be >= 0")
        values = [conv(repr(float(v))) for v in np.linspace(lo, hi, count)] if count else []
    else:
        values = [conv(p) for p in text.split(",")]
    if values != sorted(values):
        raise argparse.ArgumentTypeError(f"grid must be sorted, got {text!r}")
    return values


def efficiency_grid(text: str) -> list[float]:
    return _grid(text, efficiency)


def phase_grid(text: str) -> list[float]:
    return _grid(text, decimal)


def int_grid(text: str) -> list[int]:
    return _grid(text, lambda s: int(round(decimal(s))) if "." in s else integer(s))


def _threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("FISHERLAB_THREADS")
        if env:
            try:
                value = integer(env)
            except argparse.ArgumentTypeError:
                raise SystemExit(f"FISHERLAB_THREADS must be an integer, got {env!r}")
        else:
            value = os.cpu_count() or 1
    return max(1, value)


# eval

EVAL_QUANTITIES = ("qfi", "qfi-general", "cfi", "sql", "ratio", "threshold", "noon",
                   "optimal", "parity", "single")


def _photons(args) -> int:
    n = args.n if args.n is not None else args.k
    return 1 if n is None else n


def evaluate(args) -> tuple[float, str]:
    """Value of the requested quantity and a short description of the engine behind it."""
    q = args.quantity
    N = _photons(args)
    if q == "qfi":
        return lossy_qfi(hb_state(N), args.eta), "block-diagonal pure-state QFI of lossy HB(N)"
    if q == "qfi-general":
        return (lossy_qfi(hb_state(N), args.eta, engine="general"),
                "eigendecomposition QFI of the lossy HB(N) density matrix")
    if q == "cfi":
        cfg = PipelineConfig(N, args.phi, args.eta_p, args.eta, args.eta_d)
        return cfi(run_pipeline(cfg)), "photon-number CFI of the simulated interferometer"
    if q == "sql":
        return sql(N, args.eta, args.eta_d), "classical probe bound 2 k eta eta_d"
    if q == "ratio":
        r = advantage_ratio(N, args.eta_p, args.eta, args.eta_d)
        return r.ratio, f"max over phi of CFI / SQL (best phi = {r.best_phase!r})"
    if q == "threshold":
        t = threshold_search(N, args.axis, args.eta_p, args.eta, args.eta_d)
        return t, f"bisection on {args.axis} for ratio = 1"
    if q == "noon":
        return noon_lossy_qfi(2 * N, args.eta), "eigendecomposition QFI of a lossy N00N state with 2N photons"
    if q == "optimal":
        o = optimal_probe_qfi(2 * N, args.eta, starts=args.starts, seed=args.seed)
        return o.qfi, "multi-start Nelder-Mead over real probes with 2N photons"
    if q == "parity":
        return parity_expectation(N, args.phi), "Legendre polynomial P_N(cos 2 phi)"
    if q == "single":
        return single_outcome_fi(N, args.phi), "binary |N,N> outcome FI from Legendre functions"
    raise ValueError(q)


def cmd_eval(args) -> int:
    try:
        value, engine = evaluate(args)
    except SingularityError as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NoCrossingError as exc:
        print(f"no crossing: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{args.quantity} = {value:.15g}")
    print(f"engine: {engine}")
    return EXIT_OK


# sweep

SWEEP_QUANTITIES = ("qfi", "cfi", "ratio", "threshold", "feasibility", "figure2", "figure3", "figure4")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def _cells(args):
    """Column names, cell parameters and the per-cell evaluator for a sweep."""
    q = args.quantity
    ns = args.n if args.n is not None else [1]
    ks = args.k if args.k is not None else [2]
    phis = args.phi if args.phi is not None else [math.pi / 4]
    eps = args.eta_p if args.eta_p is not None else [1.0]
    etas = args.eta if args.eta is not None else [1.0]
    eds = args.eta_d if args.eta_d is not None else [1.0]

    if q == "qfi":
        return ["n", "eta", "qfi"], list(product(ns, etas)), \
            lambda c: [c[0], c[1], lossy_qfi(hb_state(c[0]), c[1])]
    if q == "cfi":
        def cell(c):
            n, phi, ep, e, ed = c
            return [n, phi, ep, e, ed, cfi(run_pipeline(PipelineConfig(n, phi, ep, e, ed)))]
        return ["n", "phi", "eta_p", "eta", "eta_d", "cfi"], list(product(ns, phis, eps, etas, eds)), cell
    if q == "ratio":
        def cell(c):
            r = advantage_ratio(*c)
            return [r.k, r.eta_p, r.eta, r.eta_d, r.best_phase, r.F_best, r.F_SQL, r.ratio]
        return (["k", "eta_p", "eta", "eta_d", "best_phase", "f_best", "f_sql", "ratio"],
                list(product(ks, eps, etas, eds)), cell)
    if q == "threshold":
        axis = args.axis
        fixed = {"eta_p": eps, "eta": etas, "eta_d": eds}
        fixed[axis] = [float("nan")]

        def cell(c):
            k, ep, e, ed = c
            params = {"eta_p": ep, "eta": e, "eta_d": ed}
            params.pop(axis)
            try:
                t = threshold_search(k, axis, **params)
            except NoCrossingError:
                t = float("nan")
            return [k, axis, ep, e, ed, t]
        return (["k", "axis", "eta_p", "eta", "eta_d", "threshold"],
                list(product(ks, fixed["eta_p"], fixed["eta"], fixed["eta_d"])), cell)
    if q == "figure2":
        etas = args.eta if args.eta is not None else [float(v) for v in np.linspace(0, 1, 21)]

        def cell(e):
            opt = optimal_probe_qfi(20, e, starts=args.starts, seed=args.seed).qfi
            return [e, sql(10, e, 1.0), lossy_qfi(hb_state(10), e), noon_lossy_qfi(20, e), opt]
        return ["eta", "sql", "hb10", "noon20", "optimal20"], list(etas), cell
    raise ValueError(q)


def _feasibility_rows(ks, resolution):
    rows = []
    for k in ks:
        grid = feasibility_grid(k, resolution)
        rows.extend([k, *r] for r in grid.rows())
    return ["k", "eta_p", "eta", "eta_d", "ratio", "feasible"], rows


def sweep_table(args) -> tuple[list[str], list[list]]:
    q = args.quantity
    if q in ("feasibility", "figure3", "figure4"):
        ks = {"figure3": [2], "figure4": [1, 3]}.get(q, args.k if args.k is not None else [2])
        return _feasibility_rows(ks, args.resolution)
    columns, cells, fn = _cells(args)
    with ThreadPoolExecutor(max_workers=_threads(args.threads)) as pool:
        rows = list(pool.map(fn, cells))
    return columns, rows


def render(columns, rows, fmt: str) -> str:
    if fmt == "json":
        doc = {"columns": columns, "rows": [[_json_value(v) for v in r] for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    try:
        columns, rows = sweep_table(args)
    except SingularityError as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(columns, rows, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


# validate

def cmd_validate(args) -> int:
    checks = run_validation(strict_p2=args.strict_p2, draws=args.draws)
    for c in checks:
        print(c.line())
        for note in c.notes:
            print(f"    {note}")
    failed = [c for c in checks if c.mandatory and not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed"
          + ("" if args.strict_p2 else " (P2 report non-fatal)"))
    return EXIT_VALIDATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fisherlab",
                                     description="Fisher information of lossy twin-Fock interferometry.")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate a single quantity")
    ev.add_argument("--quantity", choices=EVAL_QUANTITIES, required=True)
    ev.add_argument("--n", type=integer, help="photons per input mode of HB(N)")
    ev.add_argument("--k", type=integer, help="alias of --n")
    ev.add_argument("--phi", type=decimal, default=math.pi / 4)
    ev.add_argument("--eta-p", type=efficiency, default=1.0)
    ev.add_argument("--eta", type=efficiency, default=1.0)
    ev.add_argument("--eta-d", type=efficiency, default=1.0)
    ev.add_argument("--axis", choices=AXES, default="eta_p")
    ev.add_argument("--seed", type=integer, default=0)
    ev.add_argument("--starts", type=integer, default=20)
    ev.set_defaults(func=cmd_eval)

    sw = sub.add_parser("sweep", help="evaluate a quantity over a parameter grid")
    sw.add_argument("--quantity", choices=SWEEP_QUANTITIES, required=True)
    sw.add_argument("--n", type=int_grid)
    sw.add_argument("--k", type=int_grid)
    sw.add_argument("--phi", type=phase_grid)
    sw.add_argument("--eta-p", type=efficiency_grid)
    sw.add_argument("--eta", type=efficiency_grid)
    sw.add_argument("--eta-d", type=efficiency_grid)
    sw.add_argument("--axis", choices=AXES, default="eta_p")
    sw.add_argument("--resolution", type=integer, default=21)
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("--out", help="output path ('-' or omitted for stdout)")
    sw.add_argument("--threads", type=integer)
    sw.add_argument("--seed", type=integer, default=0)
    sw.add_argument("--starts", type=integer, default=20)
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="cross-check closed forms against the simulation")
    va.add_argument("--strict-p2", action="store_true", help="treat HB(2) table mismatches as failures")
    va.add_argument("--draws", type=integer, default=1000)
    va.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        # domain errors from the library (out-of-range N, resolution, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
