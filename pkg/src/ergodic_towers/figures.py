"""PNG figures for the report subcommands (non-interactive Agg backend)."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# no timestamp or version string in the file, so reruns are byte-identical
_META = {"Software": None}


def _finish(fig, ax, path: str) -> None:
    ax.set_xscale("log", base=2)
    ax.grid(True, which="major", alpha=0.3)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=120, metadata=_META)
    plt.close(fig)


def integral_curve(horizons: Sequence[int], values: Sequence[float], path: str,
                   title: str = "") -> None:
    """Exact integral of N_H against the horizon H."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(horizons, values, marker="o", label="exact integral of N_H")
    ax.set_xlabel("horizon H")
    ax.set_ylabel("integral of N_H")
    if title:
        ax.set_title(title)
    _finish(fig, ax, path)


def estimate_curve(rows, path: str, exact: dict | None = None, title: str = "") -> None:
    """Monte-Carlo means with 3-stderr bars, plus exact values when given."""
    hs = [r.H for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(hs, [r.mean for r in rows], yerr=[3 * r.stderr for r in rows],
                marker="s", capsize=3, label=f"mean of N_H ({rows[0].samples} samples)")
    if exact:
        ks = sorted(exact)
        ax.plot(ks, [exact[h] for h in ks], marker="o", linestyle="--", label="exact")
    ax.set_xlabel("horizon H")
    ax.set_ylabel("N_H")
    if title:
        ax.set_title(title)
    _finish(fig, ax, path)
