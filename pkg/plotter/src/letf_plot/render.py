"""Figure builders for the two CSV layouts the letf CLI emits.

Density figures: one panel per leverage ratio, solid jump density of the
reference fund, dashed transformed density of the leveraged fund, and a
vertical dashed line at the support endpoint for negative leverage.  Smile
figures: a 2x2 grid of leverage panels, solid Monte Carlo implied vol with
a standard-error band, dashed asymptotic vol, log-moneyness on the x axis.

Everything plotted comes from the CSV; nothing is recomputed.  The PNG gets
text metadata (panel count, line-style legend, y scale) so downstream
checks can verify the layout without parsing pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure

from .csvio import SchemaError, Table, read_table

DENSITY_STYLES = "h=solid; g=dashed; support-endpoint=vertical-dashed"
SMILE_STYLES = "mc_iv=solid; mc_band=fill; asym_iv=dashed"


@dataclass
class FigureSpec:
    """What to render: input CSV, figure kind, panel order, output path."""

    csv_path: str
    kind: str  # "density" | "smile"
    out_path: str
    panel_betas: Optional[list] = None
    log_y: bool = False
    dpi: int = 130

    def __post_init__(self):
        if self.kind not in ("density", "smile"):
            raise ValueError(f"kind must be 'density' or 'smile', got {self.kind!r}")


def _betas_in(table: Table) -> list:
    return sorted({r[0] for r in table.rows})


def _panel_order(requested, present, default) -> list:
    order = requested if requested is not None else [b for b in default if b in present]
    if not order:
        order = sorted(present, key=lambda b: (-b > 0, abs(b)))
    missing = [b for b in order if b not in present]
    if missing:
        raise SchemaError(f"betas {missing} requested for panels but absent from the CSV")
    return order


def build_density_figure(table: Table, spec: FigureSpec) -> Figure:
    present = _betas_in(table)
    order = _panel_order(spec.panel_betas, present, [2.0, -2.0])
    fig = Figure(figsize=(5.0 * len(order), 4.0))
    axes = fig.subplots(1, len(order), squeeze=False)[0]
    idx = {name: i for i, name in enumerate(table.header)}
    for ax, beta in zip(axes, order):
        rows = [r for r in table.rows if r[idx["beta"]] == beta]
        zs = [r[idx["z"]] for r in rows]
        ax.plot(zs, [r[idx["h"]] for r in rows], "-", color="black", label="h (fund)")
        ax.plot(zs, [r[idx["g"]] for r in rows], "--", color="tab:red", label="g (leveraged)")
        if beta <= -1.0:
            key = f"support-endpoint beta={beta!r}"
            if key not in table.metadata:
                raise SchemaError(
                    f"missing '{key}' metadata: the support cutoff of the "
                    f"transformed density cannot be drawn"
                )
            ax.axvline(float(table.metadata[key]), linestyle="--", color="gray")
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_title(f"beta = {beta:+g}")
        ax.set_xlabel("jump size z")
        ax.legend()
    fig.tight_layout()
    return fig


def build_smile_figure(table: Table, spec: FigureSpec) -> Figure:
    present = _betas_in(table)
    order = _panel_order(spec.panel_betas, present, [1.0, -1.0, 2.0, -2.0])
    ncol = 2
    nrow = (len(order) + ncol - 1) // ncol
    fig = Figure(figsize=(5.0 * ncol, 3.6 * nrow))
    axes = [ax for row in fig.subplots(nrow, ncol, squeeze=False) for ax in row]
    idx = {name: i for i, name in enumerate(table.header)}
    for ax, beta in zip(axes, order):
        rows = [r for r in table.rows if r[idx["beta"]] == beta and r[idx["valid"]]]
        rows.sort(key=lambda r: r[idx["log_moneyness"]])
        xs = [r[idx["log_moneyness"]] for r in rows]
        mc = [r[idx["mc_iv"]] for r in rows]
        lo = [r[idx["mc_iv_lo"]] for r in rows]
        hi = [r[idx["mc_iv_hi"]] for r in rows]
        asym = [r[idx["asym_iv"]] for r in rows]
        if all(v is not None for v in lo + hi):
            ax.fill_between(xs, lo, hi, alpha=0.25, color="tab:blue")
        ax.plot(xs, mc, "-", color="tab:blue", label="Monte Carlo")
        ax.plot(xs, asym, "--", color="black", label="asymptotic")
        ax.set_title(f"beta = {beta:+g}")
        ax.set_xlabel("ln K - x")
        ax.set_ylabel("implied vol")
        ax.legend()
    for ax in axes[len(order):]:
        ax.set_visible(False)
    fig.tight_layout()
    return fig


def _save(fig: Figure, spec: FigureSpec, n_panels: int, styles: str) -> str:
    metadata = {
        "letf-plot:kind": spec.kind,
        "letf-plot:panels": str(n_panels),
        "letf-plot:line-styles": styles,
        "letf-plot:yscale": "log" if spec.log_y else "linear",
        "letf-plot:source": spec.csv_path,
    }
    fig.savefig(spec.out_path, dpi=spec.dpi, metadata=metadata)
    return spec.out_path


def render_density(spec: FigureSpec) -> str:
    table = read_table(spec.csv_path)
    fig = build_density_figure(table, spec)
    return _save(fig, spec, len(fig.get_axes()), DENSITY_STYLES)


def render_smile(spec: FigureSpec) -> str:
    table = read_table(spec.csv_path)
    fig = build_smile_figure(table, spec)
    n_visible = sum(1 for ax in fig.get_axes() if ax.get_visible())
    return _save(fig, spec, n_visible, SMILE_STYLES)
