"""Render a simulation report to files: CSV summaries plus figures.

Written into a directory of the caller's choosing:

    summary.csv      one row of headline numbers
    trajectory.csv   sampled (round, reserve, running EV) points
    payouts.png      empirical payout frequencies vs exact probabilities
    reserve.png      bank reserve trajectory
    convergence.png  running EV against the exact value with a 3-sigma band
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .oracles import law_for, roulette_law
from .sim import SIM_ROULETTE_GUESS, SimReport

SUMMARY_FIELDS = [
    "game", "rounds", "played", "stake", "seed", "stand_threshold",
    "empirical_ev_per_stake", "exact_ev_per_stake", "exact_ev_fraction",
    "stddev", "bank_pnl", "ruin_events", "wins", "within_tolerance",
]


def write_report(report: SimReport, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_summary(report, outdir / "summary.csv"),
        _write_trajectory(report, outdir / "trajectory.csv"),
        _plot_payouts(report, outdir / "payouts.png"),
        _plot_reserve(report, outdir / "reserve.png"),
        _plot_convergence(report, outdir / "convergence.png"),
    ]
    return written


def _write_summary(report: SimReport, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        row = {k: getattr(report, k) for k in SUMMARY_FIELDS}
        writer.writerow(row)
    return path


def _write_trajectory(report: SimReport, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "reserve", "running_ev_per_stake"])
        writer.writerows(report.trajectory)
    return path


def _exact_law(report: SimReport):
    if report.game == "roulette":
        return roulette_law(*SIM_ROULETTE_GUESS)
    return law_for(report.game, report.stand_threshold or 17)


def _plot_payouts(report: SimReport, path: Path) -> Path:
    law = _exact_law(report)
    multiples = sorted({m for m, _ in law.outcomes} | set(report.payout_counts))
    exact = [float(law.probability_of(m)) for m in multiples]
    total = max(report.played, 1)
    empirical = [report.payout_counts.get(m, 0) / total for m in multiples]
    xs = range(len(multiples))
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], empirical, width, label="empirical")
    ax.bar([x + width / 2 for x in xs], exact, width, label="exact")
    ax.set_xticks(list(xs), [f"{m}x" for m in multiples])
    ax.set_xlabel("gross payout (multiple of stake)")
    ax.set_ylabel("probability")
    ax.set_title(f"{report.game}: payout distribution over {report.played} rounds")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_reserve(report: SimReport, path: Path) -> Path:
    rounds = [p[0] for p in report.trajectory]
    reserve = [p[1] for p in report.trajectory]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rounds, reserve, lw=1.0)
    ax.set_xlabel("round")
    ax.set_ylabel("bank reserve (tokens)")
    title = f"{report.game}: reserve trajectory"
    if report.ruin_events:
        title += f" ({report.ruin_events} refused rounds)"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_convergence(report: SimReport, path: Path) -> Path:
    rounds = [p[0] for p in report.trajectory]
    running = [p[2] for p in report.trajectory]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rounds, running, lw=1.0, label="running empirical EV")
    ax.axhline(report.exact_ev_per_stake, color="k", ls="--", lw=1.0,
               label=f"exact {report.exact_ev_fraction}")
    sigma = report.exact_sigma_per_round
    upper = [report.exact_ev_per_stake + 3 * sigma / math.sqrt(n) for n in rounds]
    lower = [report.exact_ev_per_stake - 3 * sigma / math.sqrt(n) for n in rounds]
    ax.fill_between(rounds, lower, upper, alpha=0.15, label="3-sigma band")
    ax.set_xlabel("round")
    ax.set_ylabel("gross EV per unit stake")
    ax.set_title(f"{report.game}: EV convergence")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
