"""Figure rendering for the report paths (PNG next to the CSV/JSON)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_gap_figure(report, path):
    """Per-interval gap with 2SE error bars against the theorem RHS."""
    rows = report.rows
    mids = [(r["a"] + r["b"]) / 2.0 for r in rows]
    gaps = [r["gap"] for r in rows]
    errs = [2.0 * r["se"] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(mids, gaps, yerr=errs, fmt=".", ms=4, lw=0.7, alpha=0.7,
                label="gap $\\hat\\mu(A) - \\hat\\nu(A^r)$ ± 2SE")
    ax.axhline(report.rhs, color="crimson", lw=1.2,
               label=f"theorem RHS = {report.rhs:.4g}")
    ax.axhline(0.0, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("interval midpoint")
    ax.set_ylabel("probability gap")
    ax.set_title(f"{report.spec_a} vs {report.spec_b} "
                 f"(enlargement r = {report.enlargement:.3g})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_calibration_figure(result, path):
    """Adjusted max gap per scenario against the RHS at C = 0."""
    margins = result["margins"]
    labels = [m["scenario"] for m in margins]
    gaps = [m["max_adjusted_gap"] for m in margins]
    fig, ax = plt.subplots(figsize=(7, 3.5 + 0.2 * len(labels)))
    ypos = range(len(labels))
    ax.barh(list(ypos), gaps, color="steelblue", alpha=0.8)
    ax.set_yticks(list(ypos))
    ax.set_yticklabels(labels, fontsize=7)
    ax.axvline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("max gap - 2SE")
    cstar = result["C_star"]
    ax.set_title(f"calibrated C* = {cstar:.4g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
