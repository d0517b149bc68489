"""Figure-reproduction presets.

Each preset emits the dataset behind one experiment figure: scheme
series over an SNR grid (or an element sweep, or tradeoff curves).  SNR
grids and default trial counts are tool choices, recorded in the output
metadata; trial defaults are sized so that the shallowest interesting
outage level collects on the order of a hundred events.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import __version__
from .channel import ChannelDims, PartitionPlan, Scheme
from .dmt import dmt_ar, dmt_fr_lower_bound, dmt_pr
from .errors import SpecfileError
from .runner import DMT_COLUMNS, OUTAGE_COLUMNS, ExperimentSpec, run_experiment


@dataclass(frozen=True)
class Table:
    name: str
    kind: str  # "outage" | "dmt"
    columns: list[str]
    rows: list[tuple]
    metadata: dict
    plot: str  # "snr" | "q" | "dmt"
    failures: tuple[str, ...] = ()


_SNR_FULL = "0:30:2.5"
_SNR_SHORT = "0:25:2.5"


def _series(
    scheme: Scheme,
    n: int,
    l: int,
    q: int,
    k_parts: int,
    snr_db: str,
    trials: int,
    seed: int,
    workers: int,
) -> tuple[list[tuple], list[str], str]:
    spec = ExperimentSpec(
        scheme=scheme,
        n=n,
        l=l,
        q=q,
        k_parts=k_parts,
        snr_db=_parse_range(snr_db),
        rate_r=1.0,
        trials=trials,
        seed=seed,
        workers=workers,
    )
    rows, meta, failures = run_experiment(spec)
    return [r.as_tuple() for r in rows], failures, meta["analytic_method"]


def _parse_range(text: str) -> tuple[float, ...]:
    from .runner import _parse_snr_field

    return _parse_snr_field(text)


def _meta(name: str, seed: int, trials: int, extra: dict | None = None) -> dict:
    meta = {
        "tool": "rislab",
        "version": __version__,
        "preset": name,
        "rate_r": 1.0,
        "seed": seed,
        "trials": trials,
        "note": "snr grid and trial counts are tool presets, recorded for exact re-runs",
    }
    if extra:
        meta.update(extra)
    return meta


def _outage_preset(name, series, snr, seed, trials, workers, plot="snr", extra=None):
    rows: list[tuple] = []
    failures: list[str] = []
    methods = []
    for scheme, n, l, q, k in series:
        srows, sfail, method = _series(scheme, n, l, q, k, snr, trials, seed, workers)
        rows.extend(srows)
        failures.extend(sfail)
        methods.append(f"{scheme.value}-K{k}-Q{q}:{method}")
    meta = _meta(name, seed, trials, extra)
    meta["snr_db"] = snr
    meta["analytic_methods"] = ";".join(methods)
    if failures:
        meta["partial"] = "; ".join(failures)
    return Table(
        name=name,
        kind="outage",
        columns=OUTAGE_COLUMNS,
        rows=rows,
        metadata=meta,
        plot=plot,
        failures=tuple(failures),
    )


_Q_SWEEP = (1, 2, 3, 4, 8, 16, 32, 60)


def _fig3(seed, trials, workers):
    series = [(Scheme.PR, a, a, q, 1) for a in (1, 2) for q in _Q_SWEEP]
    return _outage_preset("fig3", series, _SNR_FULL, seed, trials, workers)


def _fig4(seed, trials, workers):
    series = [(Scheme.PR, a, a, q, 1) for a in (1, 2) for q in _Q_SWEEP]
    return _outage_preset(
        "fig4",
        series,
        "5.0",
        seed,
        trials,
        workers,
        plot="q",
        extra={"note2": "outage versus element count at 5 dB"},
    )


def _fig5(seed, trials, workers):
    series = [
        (Scheme.PR, 1, 1, 60, 1),
        (Scheme.AR, 1, 1, 60, 2),
        (Scheme.AR, 1, 1, 60, 4),
        (Scheme.FR, 1, 1, 60, 2),
        (Scheme.FR, 1, 1, 60, 4),
    ]
    return _outage_preset("fig5", series, _SNR_FULL, seed, trials, workers)


def _fig6(seed, trials, workers):
    series = [
        (Scheme.PR, 2, 2, 60, 1),
        (Scheme.AR, 2, 2, 60, 2),
        (Scheme.AR, 2, 2, 60, 4),
        (Scheme.FR, 2, 2, 60, 2),
        (Scheme.FR, 2, 2, 60, 4),
    ]
    return _outage_preset(
        "fig6",
        series,
        _SNR_FULL,
        seed,
        trials,
        workers,
        extra={"note2": "FR analytic column is the independence lower bound"},
    )


def _fig7(seed, trials, workers):
    series = [
        (Scheme.PB, 1, 1, 4, 1),
        (Scheme.PB, 1, 1, 16, 1),
        (Scheme.PR, 1, 1, 16, 1),
        (Scheme.AR, 1, 1, 16, 2),
        (Scheme.AR, 1, 1, 16, 4),
        (Scheme.FR, 1, 1, 16, 2),
        (Scheme.FR, 1, 1, 16, 4),
    ]
    return _outage_preset(
        "fig7",
        series,
        _SNR_SHORT,
        seed,
        trials,
        workers,
        extra={"note2": "PB series are mc-only"},
    )


def _fig8(seed, trials, workers):
    rows = []

    def add(curve, scheme, n, l, q, k, m):
        for r, d in curve.vertices:
            rows.append((curve.label, scheme, n, l, q, k, m, r, d))

    add(dmt_pr(ChannelDims(3, 5, 3)), "PR", 3, 3, 5, 1, 5)
    add(dmt_pr(ChannelDims(3, 10, 3)), "PR", 3, 3, 10, 1, 10)
    for k in (2, 5, 10):
        plan = PartitionPlan.contiguous(10, k)
        add(dmt_ar(ChannelDims(3, 10, 3), plan), "AR", 3, 3, 10, k, plan.m)
        add(dmt_fr_lower_bound(ChannelDims(3, 10, 3), plan), "FR-LB", 3, 3, 10, k, plan.m)
    meta = _meta("fig8", seed, 0, {"note2": "exact tradeoff curves; no sampling"})
    return Table(
        name="fig8", kind="dmt", columns=DMT_COLUMNS, rows=rows, metadata=meta, plot="dmt"
    )


_PRESETS = {
    "fig3": (_fig3, 1_000_000),
    "fig4": (_fig4, 1_000_000),
    "fig5": (_fig5, 10_000_000),
    "fig6": (_fig6, 1_000_000),
    "fig7": (_fig7, 10_000_000),
    "fig8": (_fig8, 0),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def figure_preset(name: str, trials: int | None = None, seed: int = 20240101, workers: int = 1) -> Table:
    """Build the dataset for one named figure preset."""
    if name not in _PRESETS:
        raise SpecfileError(f"unknown figure preset {name!r}; choose from {PRESET_NAMES}")
    builder, default_trials = _PRESETS[name]
    return builder(seed, trials if trials is not None else default_trials, workers)
