"""Render result tables to figure files next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_MARKERS = "osv^D<>ph8"


def _series_key(columns, row):
    get = dict(zip(columns, row))
    return f"{get['scheme']} N={get['N']} L={get['L']} Q={get['Q']} K={get['K']}"


def _grouped(columns, rows):
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(_series_key(columns, row), []).append(row)
    return groups


def render_table(table, png_path: Path) -> None:
    """Write the figure for one result table (PNG, fixed dpi)."""
    if table.plot == "dmt":
        _render_dmt(table, png_path)
    elif table.plot == "q":
        _render_vs_q(table, png_path)
    else:
        _render_vs_snr(table, png_path)


def _render_vs_snr(table, png_path: Path) -> None:
    cols = table.columns
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    for i, (label, rows) in enumerate(sorted(_grouped(cols, table.rows).items())):
        snr = [r[cols.index("snr_db")] for r in rows]
        p_mc = [r[cols.index("p_mc")] for r in rows]
        p_an = [r[cols.index("p_analytic")] for r in rows]
        marker = _MARKERS[i % len(_MARKERS)]
        color = f"C{i % 10}"
        if any(v is not None for v in p_an):
            ax.plot(
                [s for s, v in zip(snr, p_an) if v], [v for v in p_an if v], "-", color=color, label=label
            )
            label = None
        pts = [(s, v) for s, v in zip(snr, p_mc) if v]
        if pts:
            ax.plot(*zip(*pts), marker, color=color, mfc="none", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("average SNR (dB)")
    ax.set_ylabel("outage probability")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def _render_vs_q(table, png_path: Path) -> None:
    cols = table.columns
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    groups: dict[str, list] = {}
    for row in table.rows:
        get = dict(zip(cols, row))
        groups.setdefault(f"{get['scheme']} N={get['N']} L={get['L']}", []).append(row)
    for i, (label, rows) in enumerate(sorted(groups.items())):
        qs = [r[cols.index("Q")] for r in rows]
        p_mc = [r[cols.index("p_mc")] for r in rows]
        p_an = [r[cols.index("p_analytic")] for r in rows]
        color = f"C{i % 10}"
        if any(v is not None for v in p_an):
            ax.plot([q for q, v in zip(qs, p_an) if v], [v for v in p_an if v], "-", color=color, label=label)
            label = None
        pts = [(q, v) for q, v in zip(qs, p_mc) if v]
        if pts:
            ax.plot(*zip(*pts), _MARKERS[i % len(_MARKERS)], color=color, mfc="none", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("number of elements Q")
    ax.set_ylabel("outage probability")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def _render_dmt(table, png_path: Path) -> None:
    cols = table.columns
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    groups: dict[str, list] = {}
    for row in table.rows:
        groups.setdefault(row[cols.index("label")], []).append(row)
    for i, (label, rows) in enumerate(sorted(groups.items())):
        rs = [r[cols.index("r")] for r in rows]
        ds = [r[cols.index("d")] for r in rows]
        ax.plot(rs, ds, "-" + _MARKERS[i % len(_MARKERS)], color=f"C{i % 10}", mfc="none", label=label)
    ax.set_xlabel("multiplexing gain r")
    ax.set_ylabel("diversity gain d(r)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
