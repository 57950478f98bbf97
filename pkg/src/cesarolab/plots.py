"""Figure rendering for traces, meshes, and verification margins.

Every function draws to a file and returns the path; nothing is shown
interactively. Figures are a convenience companion to the delimited
exports and never participate in verification outcomes.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mesh import BlockMeta, Mesh
from .orbit import CesaroTrace, Orbit
from .report import VerificationReport

_DPI = 150


def render_trace_figure(orbit: Orbit, trace: CesaroTrace, path: str) -> str:
    """Radius and running-mean norms against the knot coordinate."""
    t = orbit.mesh.t[:trace.upto]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(t, orbit.rho[:trace.upto], lw=1.0, color="tab:blue",
            label=r"$\rho_n = \|x_n\|$")
    ax.plot(t, trace.y_norm, lw=1.0, color="tab:red",
            label=r"$\|y_n\|$ (running mean)")
    if orbit.meta is not None:
        for j in orbit.meta.unit_ends:
            if j <= trace.upto:
                ax.axvline(orbit.mesh.t[j - 1], color="0.8", lw=0.6, zorder=0)
    ax.axhline(orbit.rho_inf_lo, color="tab:blue", lw=0.7, ls="--",
               label=r"$\rho_\infty$ lower bracket")
    ax.set_xlabel("knot coordinate $t_n$")
    ax.set_ylabel("norm")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{orbit.mesh.kind} orbit, {trace.upto} iterates")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_mesh_figure(mesh: Mesh, path: str,
                       meta: BlockMeta | None = None) -> str:
    """Step sizes on a log scale, with block boundaries when available."""
    n = np.arange(1, len(mesh) + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.semilogy(n, mesh.d, lw=0.9, color="tab:green")
    if meta is not None:
        for i in meta.starts[1:]:
            ax.axvline(i, color="0.8", lw=0.6, zorder=0)
    ax.set_xlabel("index $n$")
    ax.set_ylabel("step $d_n$")
    ax.set_title(f"{mesh.kind} mesh, {len(mesh)} steps")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_margin_figure(report: VerificationReport, path: str) -> str:
    """Signed margin of every finite-margin check, one bar per record."""
    recs = [r for r in report.records if r.margin != 0.0 or not r.passed]
    if not recs:
        recs = list(report.records)
    labels = [r.check_id for r in recs]
    margins = np.array([r.margin for r in recs])
    safe = np.maximum(np.abs(margins), 1e-300)
    heights = np.sign(margins) * np.log10(safe / 1e-20)
    colors = ["tab:green" if r.passed else "tab:red" for r in recs]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.32 * len(recs)), 4.6))
    ax.bar(np.arange(len(recs)), heights, color=colors)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(np.arange(len(recs)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel(r"$\mathrm{sign}(m)\,\log_{10}(|m| / 10^{-20})$")
    ax.set_title(f"check margins ({report.passed_count}/{report.total} pass)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def figure_path(out_path: str, suffix: str) -> str:
    """PNG sibling of a delimited output file: stem + '_' + suffix + '.png'."""
    stem, _ = os.path.splitext(out_path)
    return f"{stem}_{suffix}.png"
