"""Command-line entry point.

Subcommands: ``theta``, ``fplot``, ``simulate`` and ``verify``.  Data go to
``--out`` (or standard output); diagnostics go to standard error.

Exit statuses: 0 success, 2 usage error, 3 numerical non-convergence,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .besq import GridPolicy, StartState, simulate_crossing_ensemble
from .estimate import mean_t
from .specialfn import SeriesError
from .theta import (
    ProcessParams,
    SearchExhaustedError,
    f_table,
    find_theta,
    format_float,
    grid_values,
    theta_grid,
)
from .verify import SUITES, Table, VerifyConfig, run_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
EXIT_VERIFY = 4

_SEED_LIMIT = 1 << 64


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int
    replicates: Optional[int]
    out: Optional[str]
    format: str
    threads: int

    def __post_init__(self):
        if not 0 <= self.seed < _SEED_LIMIT:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.replicates is not None and self.replicates <= 0:
            raise UsageError("--replicates must be positive")
        if self.threads <= 0:
            raise UsageError("--threads must be positive")


def _range(text: str) -> tuple[float, float, float]:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return a, b, step


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    return lo, hi


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format_float(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def render(table: Table, fmt: str) -> str:
    """CSV, or JSON as an array of row objects with the CSV column names."""
    if fmt == "json":
        objs = [{k: _json_value(v) for k, v in zip(table.header, row)} for row in table.rows]
        return json.dumps(objs, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _params(ns) -> ProcessParams:
    if ns.alpha is None or ns.beta is None:
        raise UsageError("--alpha and --beta are required")
    return ProcessParams(ns.alpha, ns.beta)


def _run(ns) -> RunConfig:
    return RunConfig(ns.seed, ns.replicates, ns.out, ns.format, ns.threads)


def cmd_theta(ns) -> int:
    run = _run(ns)
    if ns.grid is not None:
        a, b, step = ns.grid
        vals = grid_values(a, b, step)
        g = theta_grid(vals, vals, threads=run.threads)
        table = Table(["alpha", "beta", "theta"], [list(r) for r in g])
        _log(f"theta grid: {len(table.rows)} cells")
    else:
        r = find_theta(_params(ns))
        if not r.order_determined:
            _log("warning: |F'(theta)| <= 1e-6, zero order undetermined (reported as 2)")
        table = Table(
            ["alpha", "beta", "theta", "residual", "zero_order_m", "order_determined", "bracket_lo", "bracket_hi"],
            [[ns.alpha, ns.beta, r.theta, r.residual, r.zero_order_m, r.order_determined, r.bracket_lo, r.bracket_hi]],
        )
    _emit(render(table, run.format), run.out)
    return EXIT_OK


def cmd_fplot(ns) -> int:
    run = _run(ns)
    p = _params(ns)
    a, b, step = ns.grid if ns.grid is not None else (0.0, 6.0, 0.01)
    if a < 0:
        raise UsageError("s range must start at s >= 0")
    tab = f_table(p, grid_values(a, b, step))
    _emit(render(Table(["s", "F"], [list(r) for r in tab]), run.format), run.out)
    return EXIT_OK


def _grid_from(ns, t_max_default: float) -> GridPolicy:
    base = GridPolicy()
    return GridPolicy(
        dt=ns.dt if ns.dt is not None else base.dt,
        t_max=ns.tmax if ns.tmax is not None else t_max_default,
        refine_levels=ns.refine if ns.refine is not None else base.refine_levels,
    )


def cmd_simulate(ns) -> int:
    run = _run(ns)
    p = _params(ns)
    st = StartState(ns.x if ns.x is not None else 0.0, ns.y if ns.y is not None else 1.0)
    grid = _grid_from(ns, 1e3)
    n = run.replicates or 10_000
    ens = simulate_crossing_ensemble(p, st, grid, n, run.seed, run.threads)
    rows = [[i, ens.t_cross[i], ens.x_at_cross[i], bool(ens.censored[i])] for i in range(n)]
    _emit(render(Table(["replicate", "t_cross", "x_at_cross", "censored"], rows), run.format), run.out)

    summary = [["replicates", float(n)], ["censored_fraction", float(ens.censored.mean())]]
    if p.alpha > p.beta:
        m = mean_t(ens, p, st)
        summary += [
            ["mean_t", m.estimate],
            ["mean_t_se", m.se],
            ["mean_t_naive", m.naive],
            ["mean_t_target", (st.y - st.x) / (p.alpha - p.beta)],
        ]
    table = Table(["quantity", "value"], summary)
    for k, v in summary:
        _log(f"{k}: {format(v, '.6g')}")
    if run.out is not None:
        stem, _ = os.path.splitext(run.out)
        _emit(render(table, run.format), f"{stem}.summary.{run.format}")
    return EXIT_OK


def cmd_verify(ns) -> int:
    run = _run(ns)
    cfg = VerifyConfig(
        seed=run.seed,
        replicates=run.replicates,
        threads=run.threads,
        alpha=ns.alpha,
        beta=ns.beta,
        x=ns.x,
        y=ns.y,
        dt=ns.dt,
        tmax=ns.tmax,
        refine=ns.refine,
        window=ns.window,
    )
    res = run_suite(ns.suite, cfg)
    report = Table(
        ["check", "measured", "target", "band", "ok"],
        [[c.name, c.measured, c.target, c.band, c.ok] for c in res.checks],
    )
    ext = run.format
    if run.out is not None:
        os.makedirs(run.out, exist_ok=True)
        for name, table in res.tables.items():
            _emit(render(table, ext), os.path.join(run.out, f"{name}.{ext}"))
        _emit(render(report, ext), os.path.join(run.out, f"report.{ext}"))
    else:
        _emit(render(report, ext), None)
    for c in res.failed():
        _log(f"FAIL {ns.suite}: {c.name} (measured {c.measured:.6g}, target {c.target:.6g}, band {c.band:.3g})")
    _log(f"{ns.suite}: {len(res.checks) - len(res.failed())}/{len(res.checks)} checks in band")
    return EXIT_OK if res.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, help="dimension of the lower process X")
    common.add_argument("--beta", type=float, help="dimension of the upper process Y")
    common.add_argument("--x", type=float, help="start of X (default 0)")
    common.add_argument("--y", type=float, help="start of Y (default 1)")
    common.add_argument("--dt", type=float, help="relative step size")
    common.add_argument("--tmax", type=float, help="censoring horizon")
    common.add_argument("--refine", type=int, help="refinement levels of the floor step")
    common.add_argument("--replicates", type=int, help="ensemble size")
    common.add_argument("--seed", type=int, default=1, help="unsigned 64-bit master seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", help="output file (directory for verify)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--grid", type=_range, help="start:stop:step")
    common.add_argument("--window", type=_window, help="tail fit window lo:hi")

    parser = argparse.ArgumentParser(prog="besqpursuit", description="Persistence exponent of squared Bessel pursuit.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("theta", parents=[common], help="first zero of F, single pair or grid").set_defaults(fn=cmd_theta)
    sub.add_parser("fplot", parents=[common], help="tabulate F(s) over --grid").set_defaults(fn=cmd_fplot)
    sub.add_parser("simulate", parents=[common], help="simulate crossing times").set_defaults(fn=cmd_simulate)
    pv = sub.add_parser("verify", parents=[common], help="run a verification suite")
    pv.add_argument("suite", choices=sorted(SUITES))
    pv.set_defaults(fn=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.fn(ns)
    except (SeriesError, SearchExhaustedError) as exc:
        _log(f"error: numerical non-convergence: {exc}")
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
