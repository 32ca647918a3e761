"""Render benchmark CSV rows to PNG figures."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}


def _errorbars(rows):
    med = [r.median_s for r in rows]
    lo = [r.median_s - r.min_s for r in rows]
    hi = [r.max_s - r.median_s for r in rows]
    return med, [lo, hi]


def plot_generate(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for op, label in (("spend", "Spend"), ("pre_spend", "Pre-Spend")):
            sel = sorted((r for r in rows if r.operation == op), key=lambda r: r.io)
            if not sel:
                continue
            med, err = _errorbars(sel)
            ax.errorbar([r.io for r in sel], med, yerr=err, marker="o", ms=3, capsize=2, label=label)
        ring = next((r.ring for r in rows if r.operation == "spend"), "?")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_xlabel("inputs = outputs")
        ax.set_ylabel("generation time [s]")
        ax.set_title(f"Transaction generation (ring {ring}, min/median/max)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_throughput(rows, path):
    verify = sorted((r for r in rows if r.operation == "verify"), key=lambda r: r.workers)
    scan = [r for r in rows if r.operation == "scan" and not math.isnan(r.throughput_per_s)]
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
        if verify:
            ax1.plot([r.workers for r in verify], [r.throughput_per_s for r in verify], marker="o", ms=3)
            ax1.set_xticks([r.workers for r in verify])
        ax1.set_xlabel("worker processes")
        ax1.set_ylabel("2-in/2-out verifications / s")
        ax1.set_title("Verification throughput")
        bars = []
        if verify:
            bars.append(("verify (1 worker)", verify[0].throughput_per_s))
        if scan:
            bars.append(("scan", scan[0].throughput_per_s))
        if bars:
            ax2.bar([b[0] for b in bars], [b[1] for b in bars], color=["C0", "C1"][: len(bars)])
            ax2.set_yscale("log")
        ax2.set_ylabel("items / s")
        ax2.set_title("Scan vs verify")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_report(rows, outdir) -> list:
    """Write every figure the rows support; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    if any(r.operation in ("spend", "pre_spend") for r in rows):
        p = os.path.join(outdir, "generate.png")
        plot_generate(rows, p)
        paths.append(p)
    if any(r.operation in ("verify", "scan") for r in rows):
        p = os.path.join(outdir, "throughput.png")
        plot_throughput(rows, p)
        paths.append(p)
    return paths
