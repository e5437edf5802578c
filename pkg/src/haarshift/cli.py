"""Command-line front end: verification suite, single-weight norms,
parameter sweeps with slope fitting, inequality battery, corona inspection,
and kernel tables.

CSV rows use the fixed header ``family,param,depth,shift,term,a2,norm,ratio``
with 17-significant-digit decimals, so repeated identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimates import (
    corona,
    corona_members,
    inequality_battery,
    nested_kernel_value,
    s_coefficient,
)
from .grid import DyadicIndex, Grid, averages, averaging_function
from .norms import operator_norm
from .operators import (
    Q_LABELS,
    SHIFT_KINDS,
    conjugated_shift,
    haar_shift,
    resolution_pieces,
)
from .verify import run_verification
from .weights import WeightSpec, a2_characteristic, make_weight

__all__ = ["main", "CSV_HEADER", "TERM_ORDER", "SweepRow", "SlopeFit", "fit_slopes"]

CSV_HEADER = "family,param,depth,shift,term,a2,norm,ratio"
TERM_ORDER = Q_LABELS + ("M_conj", "mean_cross")

MAX_NORM_DEPTH = 14
MAX_KERNEL_DEPTH = 7
FIT_MIN_A2 = 1.01
FIT_MIN_NORM = 1e-10
FIT_MIN_POINTS = 3


@dataclass(frozen=True)
class SweepRow:
    family: str
    param: float
    depth: int
    shift: str
    term: str
    a2: float
    norm: float
    ratio: float

    def format(self) -> str:
        return (
            f"{self.family},{_fmt(self.param)},{self.depth},{self.shift},"
            f"{self.term},{_fmt(self.a2)},{_fmt(self.norm)},{_fmt(self.ratio)}"
        )


@dataclass(frozen=True)
class SlopeFit:
    term: str
    slope: float
    intercept: float
    r_squared: float
    points: int


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _spec_for(family: str, param: float, seed: int) -> WeightSpec:
    if family == "power":
        return WeightSpec("power", alpha=param)
    if family == "constant":
        return WeightSpec("constant", c=param)
    if family == "cascade":
        return WeightSpec("cascade", eps=param, seed=seed)
    if family == "step":
        return WeightSpec("step", a=param, b=1.0, split=0.5)
    raise ValueError(f"unknown family {family!r}")


def compute_norm_rows(
    family: str,
    param: float,
    spec: WeightSpec,
    depth: int,
    shift: str,
    tol: float,
    seed: int,
) -> tuple[list[SweepRow], list[str]]:
    """All eleven operator-norm rows for one weight; warnings for rows whose
    power iteration did not converge (marked by ratio = NaN)."""
    grid = Grid(depth)
    w = make_weight(spec, grid)
    a2 = a2_characteristic(w)
    ops = resolution_pieces(w, shift)
    ops["M_conj"] = conjugated_shift(w, shift)
    rows, warnings = [], []
    for term in TERM_ORDER:
        result = operator_norm(ops[term], tol=tol, seed=seed)
        ratio = result.value / a2 if result.converged else float("nan")
        if not result.converged:
            warnings.append(
                f"warning: {term} at {family}:{_fmt(param)} depth {depth} did not "
                f"converge after {result.iterations} iterations "
                f"(residual {result.residual:.3e})"
            )
        rows.append(
            SweepRow(family, param, depth, shift, term, a2, result.value, ratio)
        )
    return rows, warnings


def _sweep_point(args: tuple) -> tuple[list[SweepRow], list[str]]:
    family, param, depth, shift, tol, seed = args
    spec = _spec_for(family, param, seed)
    return compute_norm_rows(family, param, spec, depth, shift, tol, seed)


def sweep_rows(
    family: str,
    params: list[float],
    depth: int,
    shift: str,
    tol: float,
    seed: int,
    workers: int | None = None,
) -> tuple[list[SweepRow], list[str]]:
    """One norms block per parameter, computed in a process pool but emitted
    in deterministic (param, term) order."""
    jobs = [(family, p, depth, shift, tol, seed) for p in params]
    if workers == 0 or len(jobs) == 1:
        results = [_sweep_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    rows, warnings = [], []
    for point_rows, point_warnings in results:
        rows.extend(point_rows)
        warnings.extend(point_warnings)
    return rows, warnings


def fit_slopes(rows: list[SweepRow]) -> tuple[list[SlopeFit], list[str]]:
    """Ordinary least squares of log(norm) on log(a2) per term, over rows
    with a2 > 1.01 and norm > 1e-10; terms with fewer than three usable
    points are reported in the notices instead."""
    fits, notices = [], []
    for term in TERM_ORDER:
        pts = [
            (math.log(r.a2), math.log(r.norm))
            for r in rows
            if r.term == term and r.a2 > FIT_MIN_A2 and r.norm > FIT_MIN_NORM
        ]
        if len(pts) < FIT_MIN_POINTS:
            notices.append(
                f"fit omitted for {term}: only {len(pts)} usable points"
            )
            continue
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        slope, intercept = np.polyfit(x, y, 1)
        predicted = slope * x + intercept
        ss_res = float(np.sum((y - predicted) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        fits.append(SlopeFit(term, float(slope), float(intercept), r_squared, len(x)))
    return fits, notices


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        os.unlink(tmp_path)
        raise


def _emit_csv(rows: list[SweepRow], out: str | None) -> None:
    text = "\n".join([CSV_HEADER] + [r.format() for r in rows]) + "\n"
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    results = run_verification(args.depth, args.seed, args.tol)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name}  max_err={r.max_err:.3e}  tol={r.threshold:g}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed checks: " + ", ".join(r.name for r in failed))
        return 1
    return 0


def cmd_norms(args) -> int:
    spec = WeightSpec.parse(args.weight)
    param = {
        "constant": spec.c,
        "power": spec.alpha,
        "cascade": spec.eps,
        "step": spec.a,
    }[spec.family]
    rows, warnings = compute_norm_rows(
        spec.family, param, spec, args.depth, args.shift, args.tol, args.seed
    )
    for line in warnings:
        print(line, file=sys.stderr)
    _emit_csv(rows, args.out)
    return 0


def cmd_sweep(args) -> int:
    params = [float(p) for p in args.params.split(",") if p.strip()]
    if len(params) < 3:
        raise SystemExit("sweep needs at least 3 parameters")
    rows, warnings = sweep_rows(
        args.family, params, args.depth, args.shift, args.tol, args.seed, args.workers
    )
    for line in warnings:
        print(line, file=sys.stderr)
    _emit_csv(rows, args.out)
    fits, notices = fit_slopes(rows)
    fit_stream = sys.stdout if args.out else sys.stderr
    print("term  slope  intercept  r_squared  points", file=fit_stream)
    for fit in fits:
        print(
            f"{fit.term}  {fit.slope:.6f}  {fit.intercept:.6f}  "
            f"{fit.r_squared:.6f}  {fit.points}",
            file=fit_stream,
        )
    for notice in notices:
        print(notice, file=fit_stream)
    if args.depth_stability:
        _depth_stability_report(args, params, rows)
    return 0


def _depth_stability_report(args, params: list[float], rows: list[SweepRow]) -> None:
    """Recompute at depth-2 and report relative norm differences (the size
    of the shift-truncation effect); diagnostic only, nothing asserted."""
    shallow_depth = args.depth - 2
    if shallow_depth < 2:
        print("depth-stability: depth too small to compare", file=sys.stderr)
        return
    shallow, _ = sweep_rows(
        args.family, params, shallow_depth, args.shift, args.tol, args.seed,
        args.workers,
    )
    by_key = {(r.param, r.term): r for r in shallow}
    print(f"depth-stability: depth {args.depth} vs {shallow_depth}", file=sys.stderr)
    for row in rows:
        other = by_key[(row.param, row.term)]
        base = max(row.norm, 1e-300)
        rel = abs(row.norm - other.norm) / base
        print(
            f"depth-stability: {row.term} param={_fmt(row.param)} "
            f"rel_diff={rel:.3e}",
            file=sys.stderr,
        )


def cmd_battery(args) -> int:
    spec = WeightSpec.parse(args.weight)
    w = make_weight(spec, Grid(args.depth))
    print(inequality_battery(w).format())
    return 0


def cmd_corona(args) -> int:
    spec = WeightSpec.parse(args.weight)
    grid = Grid(args.depth)
    w = make_weight(spec, grid)
    decomp = corona(w, DyadicIndex(0, 0), args.gamma)
    avg = w.w.averages
    for k, generation in enumerate(decomp.generations):
        items = " ".join(str(q) for q in generation)
        print(f"generation {k}: {len(generation)} interval(s): {items}")
    ok = True
    for chain in decomp.chains():
        for parent, child in zip(chain, chain[1:]):
            if not avg[child] > args.gamma * avg[parent]:
                ok = False
    # within each corona no average exceeds gamma times the stopping average
    for g in decomp.stopping_intervals():
        top = max(avg[k] for k in corona_members(decomp, w, g))
        if top > args.gamma * avg[g] * (1 + 1e-12):
            ok = False
    print(f"super-geometric check: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_kernel(args) -> int:
    grid = Grid(args.depth)
    shift = haar_shift("half", grid)
    print("J(level,pos)  L(level,pos)  kernel  nested_closed_form")
    worst = 0.0
    indices = list(grid.all_indices())
    for j_idx in indices:
        kernel_tree = averages(shift.apply(averaging_function(grid, j_idx))).tree
        for l_idx in indices:
            value = kernel_tree[l_idx.flat_offset]
            if j_idx.strictly_contains(l_idx):
                closed = nested_kernel_value(grid, j_idx, l_idx)
                worst = max(worst, abs(value - closed))
                closed_text = _fmt(closed)
            else:
                closed_text = "-"
            print(f"{j_idx}  {l_idx}  {_fmt(value)}  {closed_text}")
    print(f"max |kernel - closed form| over nested pairs: {worst:.3e}")
    bound_ok = all(
        abs(s_coefficient(grid, j)) <= math.sqrt(2.0) / j.length + 1e-12
        for j in indices
    )
    print(f"ancestor-sum bound sqrt(2)/|J|: {'PASS' if bound_ok else 'FAIL'}")
    return 0 if worst < 1e-10 and bound_ok else 1


# --------------------------------------------------------------------------
# argument parsing


def _depth_arg(lo: int, hi: int):
    def parse(text: str) -> int:
        value = int(text)
        if not lo <= value <= hi:
            raise argparse.ArgumentTypeError(
                f"depth must be between {lo} and {hi}, got {value}"
            )
        return value

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarshift",
        description="Weighted dyadic Haar analysis workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the exact-identity suite")
    p.add_argument("--depth", type=_depth_arg(2, 10), required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("norms", help="operator norms for one weight")
    p.add_argument("--weight", required=True, help="weight spec, e.g. power:alpha=0.5")
    p.add_argument("--depth", type=_depth_arg(2, MAX_NORM_DEPTH), required=True)
    p.add_argument("--shift", choices=SHIFT_KINDS, default="half")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("sweep", help="norms across a weight family")
    p.add_argument("--family", choices=("constant", "power", "cascade", "step"),
                   required=True)
    p.add_argument("--params", required=True, help="comma-separated parameter list")
    p.add_argument("--depth", type=_depth_arg(2, MAX_NORM_DEPTH), required=True)
    p.add_argument("--shift", choices=SHIFT_KINDS, default="half")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="process-pool size; 0 forces serial execution")
    p.add_argument("--depth-stability", action="store_true",
                   help="also recompute at depth-2 and report relative differences")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("battery", help="weighted Carleson-sum inequality battery")
    p.add_argument("--weight", required=True)
    p.add_argument("--depth", type=_depth_arg(2, MAX_NORM_DEPTH), required=True)
    p.set_defaults(func=cmd_battery)

    p = sub.add_parser("corona", help="stopping-time generations for a weight")
    p.add_argument("--weight", required=True)
    p.add_argument("--depth", type=_depth_arg(2, MAX_NORM_DEPTH), required=True)
    p.add_argument("--gamma", type=float, default=2.0)
    p.set_defaults(func=cmd_corona)

    p = sub.add_parser("kernel", help="shifted averaging-kernel table")
    p.add_argument("--depth", type=_depth_arg(2, MAX_KERNEL_DEPTH), required=True)
    p.set_defaults(func=cmd_kernel)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # join "--params -0.9,..." so negative leading values survive argparse
    for i, token in enumerate(argv[:-1]):
        if token == "--params":
            argv[i : i + 2] = [f"--params={argv[i + 1]}"]
            break
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        parser.exit(2, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
