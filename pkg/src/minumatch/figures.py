"""Matplotlib renderings of evaluation outputs.

Figures are written next to scores.csv/report.json by the CLI's eval path;
the evaluation module itself stays plot-free so headless consumers can use
the CSV alone.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport, ScoreSet  # noqa: E402


def plot_error_rates(report: EvalReport, path: str | Path) -> Path:
    """FAR/FRR against the decision threshold, with the EER level marked."""
    thresholds = [row[0] for row in report.roc]
    far = [row[1] for row in report.roc]
    frr = [row[2] for row in report.roc]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(thresholds, far, label="FAR", color="#c4452c")
    ax.plot(thresholds, frr, label="FRR", color="#2c6fc4")
    ax.axhline(report.eer, color="gray", linestyle="--", linewidth=0.9,
               label=f"EER = {report.eer:.2f}%")
    ax.set_xlabel("score threshold")
    ax.set_ylabel("error rate (%)")
    ax.set_title("Verification error trade-off")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_score_histogram(scores: ScoreSet, path: str | Path) -> Path:
    """Overlaid genuine/impostor score distributions."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    bins = 50
    ax.hist(scores.impostor, bins=bins, range=(0.0, 1.0), alpha=0.6,
            label=f"impostor (n={len(scores.impostor)})", color="#c4452c",
            density=True)
    ax.hist(scores.genuine, bins=bins, range=(0.0, 1.0), alpha=0.6,
            label=f"genuine (n={len(scores.genuine)})", color="#2c6fc4",
            density=True)
    ax.set_xlabel("match score")
    ax.set_ylabel("density")
    ax.set_title("Score distributions")
    ax.legend()
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_all(report: EvalReport, scores: ScoreSet, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    return [
        plot_error_rates(report, out / "roc.png"),
        plot_score_histogram(scores, out / "score_hist.png"),
    ]
