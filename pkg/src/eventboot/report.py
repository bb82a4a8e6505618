"""Figures written next to the JSON and text reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluate import EvalReport  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}
_PNG_META = {"Software": None}


def _save(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_eval(report: EvalReport, path: str | Path, title: str = "Trigger scores") -> Path:
    """Grouped P/R/F1 bars per event type, plus the micro average."""
    names = sorted(report.per_type) + ["MICRO"]
    cells = [report.per_type[n] for n in names[:-1]] + [report]
    x = np.arange(len(names))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(names) + 1.5), 3.2))
        for k, (label, attr) in enumerate((("P", "precision"), ("R", "recall"), ("F1", "f1"))):
            ax.bar(x + (k - 1) * 0.27, [getattr(c, attr) for c in cells], width=0.27, label=label)
        ax.set_xticks(x, names, rotation=30, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_title(title)
        ax.legend(ncol=3, loc="lower right")
        return _save(fig, path)


def plot_comparison(before: EvalReport, after: EvalReport, path: str | Path,
                    labels: tuple[str, str] = ("gold only", "gold + bootstrap")) -> Path:
    """Per-type F1 of two systems side by side."""
    names = sorted(set(before.per_type) | set(after.per_type)) + ["MICRO"]

    def f1s(r: EvalReport) -> list[float]:
        return [r.per_type[n].f1 if n in r.per_type else 0.0 for n in names[:-1]] + [r.f1]

    x = np.arange(len(names))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.8 * len(names) + 1.5), 3.2))
        ax.bar(x - 0.2, f1s(before), width=0.4, label=labels[0], color="0.6")
        ax.bar(x + 0.2, f1s(after), width=0.4, label=labels[1], color="C0")
        ax.set_xticks(x, names, rotation=30, ha="right")
        ax.set_ylabel("F1")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"micro F1 {before.f1:.3f} -> {after.f1:.3f}")
        ax.legend(loc="lower right")
        return _save(fig, path)


def plot_funnel(counts: Mapping[str, int], path: str | Path) -> Path:
    """Horizontal bars for the per-stage counts of one run."""
    names = list(counts)
    values = [counts[n] for n in names]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 0.35 * len(names) + 1.0))
        y = np.arange(len(names))[::-1]
        ax.barh(y, values, color="C2")
        ax.set_yticks(y, names)
        for yi, v in zip(y, values):
            ax.text(v, yi, f" {v}", va="center", fontsize=8)
        ax.set_xlim(0, max(values + [1]) * 1.15)
        ax.set_title("pipeline funnel")
        return _save(fig, path)
