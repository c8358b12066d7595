"""SVG figures for experiment summaries.

Figures are written as SVG with a fixed hash salt and no date metadata, so
the same summary always produces the same bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "svg.hashsalt": "oig-lab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "figure.figsize": (5.0, 3.4),
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "oig-lab"})
    plt.close(fig)
    return path


def quantile_plot(rows: Sequence[dict], path: str | Path, title: str = "") -> Path:
    """Empirical risk quantiles and the bound against n, one panel line per (setting, delta).

    Each row needs ``setting``, ``delta``, ``n``, ``median``, ``quantile`` and ``bound``.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        groups: dict = {}
        for r in rows:
            groups.setdefault((r["setting"], r["delta"]), []).append(r)
        for i, ((setting, delta), rs) in enumerate(sorted(groups.items())):
            rs = sorted(rs, key=lambda r: r["n"])
            ns = [r["n"] for r in rs]
            color = f"C{i % 10}"
            label = f"{setting}, delta={delta:g}"
            ax.plot(ns, [r["quantile"] for r in rs], "o-", color=color, label=f"{label}: (1-delta) quantile")
            ax.plot(ns, [r["median"] for r in rs], "s:", color=color, ms=3, label=f"{label}: median")
            ax.plot(ns, [r["bound"] for r in rs], "--", color=color, label=f"{label}: bound")
        ax.set_xscale("log", base=2)
        ax.set_yscale("symlog", linthresh=1e-3)
        ax.set_xlabel("sample size n")
        ax.set_ylabel("risk")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=6)
        fig.tight_layout()
        return _save(fig, path)


def martingale_plot(reports: Sequence[dict], path: str | Path) -> Path:
    """Violation frequencies per process next to their tolerance."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        labels = [f"{r['process']}\ndelta={r['delta']:g}" for r in reports]
        xs = range(len(reports))
        ax.bar([x - 0.2 for x in xs], [r["upper_frequency"] for r in reports], 0.4, label="upper")
        ax.bar([x + 0.2 for x in xs], [r["lower_frequency"] for r in reports], 0.4, label="lower")
        ax.scatter(list(xs), [r["tolerance"] for r in reports], marker="_", s=400, color="k", label="tolerance")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, fontsize=7)
        ax.set_ylabel("violation frequency")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)
