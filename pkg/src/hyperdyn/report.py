"""CSV and figure output for the experiment subcommands.

Figures are optional side artifacts rendered next to the delimited output;
everything numeric also lands in the CSV so external plotters can be used
instead.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path: str, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fieldnames})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def mixing_figure(rows, path: str, r: float) -> None:
    ns = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.semilogy(ns, [row["residual_at_u"] for row in rows], "o-",
                label="|w - u|")
    ax.semilogy(ns, [row["residual_at_v"] for row in rows], "s-",
                label="|T^n w - v|")
    ax.axhline(r, color="k", ls="--", lw=0.8, label="radius r")
    ax.set_xlabel("n")
    ax.set_ylabel("residual")
    ax.legend()
    _save(fig, path)


def growth_figure(rows, path: str) -> None:
    ns = [row[0] for row in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(ns, [row[1] for row in rows], label="pseudo-orbit norm")
    ax.plot(ns, [row[2] for row in rows], "--", label="shadow-orbit norm")
    ax.set_xlabel("n")
    ax.set_ylabel("norm")
    ax.legend()
    _save(fig, path)


def recovery_figure(log, path: str) -> None:
    its = [row[0] for row in log]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.semilogy(its, [max(row[1], 1e-17) for row in log], "o-",
                label="minus tilt increment")
    ax.semilogy(its, [max(row[2], 1e-17) for row in log], "s-",
                label="plus tilt increment")
    ax.set_xlabel("iteration")
    ax.set_ylabel("sup-norm increment")
    ax.legend()
    _save(fig, path)


def shadow_figure(distances, bound: float, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(range(len(distances)), distances, label="|w_n - x_n|")
    ax.axhline(bound, color="k", ls="--", lw=0.8, label="K delta")
    ax.set_xlabel("n")
    ax.set_ylabel("distance")
    ax.legend()
    _save(fig, path)
