"""Command-line batch experiment runner.

Verbs:
  run <specfile>     evaluate a declarative experiment description
  figure <name>      emit a figure-reproduction dataset (and its plot)
  dmt                print tradeoff curves for one geometry
  corr               flip-scheme gain correlation for one partition

Outputs are CSV files with a '#'-prefixed metadata header plus a JSON
companion; figure presets also render a PNG unless --no-plot is given.
The default output directory is $RISLAB_OUTDIR (falling back to
./results).  Exit codes: 0 success, 2 validation error, 3 accuracy
failure with partial output written.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .analytic import corr_coeff, corr_coeff_limit
from .channel import ChannelDims, PartitionPlan
from .errors import DomainError, SpecfileError, UnsupportedConfigurationError
from .io import write_csv, write_json
from .presets import PRESET_NAMES, Table, figure_preset
from .runner import DMT_COLUMNS, OUTAGE_COLUMNS, parse_specfile, run_experiment

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ACCURACY = 3


def _out_dir() -> Path:
    return Path(os.environ.get("RISLAB_OUTDIR", "results"))


def _write_table(table: Table, out: Path, plot: bool) -> None:
    write_csv(out, table.metadata, table.columns, table.rows)
    write_json(out.with_suffix(".json"), table.metadata, table.columns, table.rows)
    if plot:
        from .plotting import render_table

        render_table(table, out.with_suffix(".png"))


def _cmd_run(args) -> int:
    path = Path(args.specfile)
    if not path.exists():
        print(f"error: spec file {path} not found", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        spec = parse_specfile(path.read_text(), path_label=str(path))
        if args.workers is not None:
            spec = type(spec)(**{**spec.__dict__, "workers": args.workers})
        rows, metadata, failures = run_experiment(spec)
    except (SpecfileError, DomainError, UnsupportedConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out or spec.out or (_out_dir() / f"{path.stem}.csv"))
    table = Table(
        name=path.stem,
        kind="outage",
        columns=OUTAGE_COLUMNS,
        rows=[r.as_tuple() for r in rows],
        metadata=metadata,
        plot="snr",
        failures=tuple(failures),
    )
    _write_table(table, out, args.plot)
    print(f"wrote {out}")
    if failures:
        print(f"warning: partial output, accuracy failures: {failures}", file=sys.stderr)
        return EXIT_ACCURACY
    return EXIT_OK


def _cmd_figure(args) -> int:
    try:
        table = figure_preset(args.name, trials=args.trials, seed=args.seed, workers=args.workers)
    except (SpecfileError, DomainError, UnsupportedConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out or (_out_dir() / f"{args.name}.csv"))
    _write_table(table, out, not args.no_plot)
    print(f"wrote {out}")
    if table.failures:
        print(f"warning: partial output, accuracy failures: {table.failures}", file=sys.stderr)
        return EXIT_ACCURACY
    return EXIT_OK


def _cmd_dmt(args) -> int:
    try:
        n, q, l = (int(v) for v in args.dims.split(","))
        dims = ChannelDims(n=n, q=q, l=l)
        from .dmt import cutset_summary, dmt_ar, dmt_fr_lower_bound, dmt_pr

        rows = []

        def add(curve, scheme, k, m):
            for r, d in curve.vertices:
                rows.append((curve.label, scheme, n, l, q, k, m, r, d))

        add(dmt_pr(dims), "PR", 1, q)
        if args.k_parts:
            plan = PartitionPlan.contiguous(q, args.k_parts)
            add(dmt_ar(dims, plan), "AR", args.k_parts, plan.m)
            add(dmt_fr_lower_bound(dims, plan), "FR-LB", args.k_parts, plan.m)
        summary = cutset_summary(dims, args.rate)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    meta = {
        "tool": "rislab",
        "version": __version__,
        "table": "dmt",
        "dims": args.dims,
        "d_max": summary.d_max,
        "r_max": summary.r_max,
        "coding_gain": "" if summary.coding_gain is None else f"{summary.coding_gain:.12g}",
        "condition_window": ",".join(str(m) for m in summary.condition_window) or "empty",
    }
    for row in rows:
        print(" ".join(str(v) for v in row))
    print(f"# d_max={summary.d_max} r_max={summary.r_max} window={meta['condition_window']}")
    if args.out:
        table = Table(
            name="dmt", kind="dmt", columns=DMT_COLUMNS, rows=rows, metadata=meta, plot="dmt"
        )
        _write_table(table, Path(args.out), not args.no_plot)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_corr(args) -> int:
    try:
        if args.q % args.k_parts != 0:
            raise DomainError(f"k_parts={args.k_parts} does not divide q={args.q}")
        model = corr_coeff(args.q, args.k_parts, args.q // args.k_parts)
        limit = corr_coeff_limit(args.k_parts)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"q={args.q} k_parts={args.k_parts} m={args.q // args.k_parts}")
    print(f"zeta={model.zeta:.12g} b={model.b} omega={model.omega:.12g} sigma_sq={model.sigma_sq:g}")
    print(f"large_q_limit={limit:.12g}")
    if args.trials:
        from .mc import RngSpec, estimate_correlation

        est = estimate_correlation(
            ChannelDims(1, args.q, 1),
            PartitionPlan.contiguous(args.q, args.k_parts),
            (1, 2),
            args.trials,
            RngSpec(args.seed),
        )
        print(f"mc_estimate={est.coeff:.6f} std_error={est.std_error:.2e} trials={est.trials}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rislab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rislab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a declarative experiment spec file")
    p_run.add_argument("specfile")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--plot", action="store_true", help="also render a PNG")
    p_run.set_defaults(func=_cmd_run)

    p_fig = sub.add_parser("figure", help="emit a figure-reproduction dataset")
    p_fig.add_argument("name", help=f"one of {', '.join(PRESET_NAMES)}")
    p_fig.add_argument("--trials", type=int, default=None)
    p_fig.add_argument("--seed", type=int, default=20240101)
    p_fig.add_argument("--out", default=None)
    p_fig.add_argument("--workers", type=int, default=1)
    p_fig.add_argument("--no-plot", action="store_true")
    p_fig.set_defaults(func=_cmd_figure)

    p_dmt = sub.add_parser("dmt", help="tradeoff curves for one geometry")
    p_dmt.add_argument("--dims", required=True, help="N,Q,L")
    p_dmt.add_argument("--K", dest="k_parts", type=int, default=None)
    p_dmt.add_argument("--rate", type=float, default=1.0)
    p_dmt.add_argument("--out", default=None)
    p_dmt.add_argument("--no-plot", action="store_true")
    p_dmt.set_defaults(func=_cmd_dmt)

    p_corr = sub.add_parser("corr", help="flip-scheme gain correlation")
    p_corr.add_argument("--q", type=int, required=True)
    p_corr.add_argument("--k", dest="k_parts", type=int, required=True)
    p_corr.add_argument("--trials", type=int, default=0, help="optional Monte Carlo check")
    p_corr.add_argument("--seed", type=int, default=20240101)
    p_corr.set_defaults(func=_cmd_corr)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
