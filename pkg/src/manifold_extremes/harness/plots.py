from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..limits import gumbel2  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "manifold-extremes"


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_limit_law(rows: list[dict], path: Path) -> None:
    hs = sorted({r["h"] for r in rows}, reverse=True)
    fig, axes = plt.subplots(1, len(hs), figsize=(3.2 * len(hs), 3.2), squeeze=False, sharey=True)
    zz = np.linspace(min(r["z"] for r in rows) - 0.5, max(r["z"] for r in rows) + 0.5, 200)
    for ax, h in zip(axes[0], hs):
        sel = [r for r in rows if r["h"] == h]
        ax.plot(zz, gumbel2(zz), "k-", lw=1, label="exp(-2e^-z)")
        ax.errorbar([r["z"] for r in sel], [r["empirical"] for r in sel], yerr=[2 * r["stderr"] for r in sel],
                    fmt="o", ms=3, capsize=2, label="empirical")
        ax.set_title(f"h = 1/{1 / h:g}")
        ax.set_xlabel("z")
    axes[0][0].set_ylabel("P(sup |X| <= theta(z))")
    axes[0][0].legend(fontsize=7)
    _save(fig, path)


def plot_tail(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4, 3.2))
    x = [r["x"] for r in rows]
    ax.semilogy(x, [r["predicted"] for r in rows], "k-", label="asymptote")
    ax.errorbar(x, [r["empirical"] for r in rows], yerr=[2 * r["stderr"] for r in rows], fmt="o", ms=3, label="MC")
    ax.set_xlabel("x")
    ax.set_ylabel("P(sup X > x)")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_ladder(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4, 3.2))
    g = [r["gamma"] for r in rows]
    ax.errorbar(g, [r["h_rate"] for r in rows], yerr=[2 * r["stderr"] for r in rows], fmt="o-", ms=3)
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("gamma")
    ax.set_ylabel("rate estimate")
    _save(fig, path)


def plot_q(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4, 3.2))
    ax.plot([r["delta"] for r in rows], [r["q_hat"] for r in rows], "o-", ms=3)
    ax.set_xlabel("delta")
    ax.set_ylabel("Q_hat(delta)")
    _save(fig, path)


def plot_report(report, outdir: Path) -> None:
    t = report.tables
    if "limit_law" in t:
        plot_limit_law(t["limit_law"], outdir / "limit_law.svg")
    if "tail" in t:
        plot_tail(t["tail"], outdir / "tail.svg")
    if "ladder" in t:
        plot_ladder(t["ladder"], outdir / "ladder.svg")
    if "q_delta" in t:
        plot_q(t["q_delta"], outdir / "q_delta.svg")
