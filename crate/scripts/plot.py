"""Render figures from suptrap CSV output.

usage: python scripts/plot.py OUTPUT_DIR [OUTPUT_DIR ...]

Looks for atom.csv, optical.csv, bubble.csv and sweep_summary.csv in each
directory and writes a PNG next to every file it finds.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def atom(path):
    df = pd.read_csv(path)
    fig, ax = plt.subplots()
    ax.semilogy(df.cycle, df.removed, "o", ms=3, label="removed")
    ax.semilogy(df.cycle, df.expected_removed, "-", label="expected")
    ax.set_xlabel("cycle")
    ax.set_ylabel("atoms removed")
    ax.legend()
    return fig


def optical(path):
    df = pd.read_csv(path)
    fig, ax = plt.subplots()
    ax.semilogy(df["pass"], df.escapes_D1 + df.escapes_D2, "o", ms=3, label="escapes")
    ax.semilogy(df["pass"], df.survivors, "-", label="survivors")
    ax.set_xlabel("pass")
    ax.legend()
    return fig


def bubble(path):
    df = pd.read_csv(path)
    fig, ax = plt.subplots()
    ax.plot(df.time, df.enclosed_probability)
    ax.set_xlabel("time")
    ax.set_ylabel("enclosed probability")
    return fig


def sweep(path):
    df = pd.read_csv(path)
    fig, ax = plt.subplots()
    ax.errorbar(
        df.collapse_probability,
        df.p_hat,
        yerr=[df.p_hat - df.p_ci_low, df.p_ci_high - df.p_hat],
        fmt="o",
    )
    lim = [0, df.collapse_probability.max() * 1.1]
    ax.plot(lim, lim, "k:")
    ax.set_xlabel("injected collapse probability")
    ax.set_ylabel("estimated collapse probability")
    return fig


PLOTS = {"atom.csv": atom, "optical.csv": optical, "bubble.csv": bubble, "sweep_summary.csv": sweep}


def main(dirs):
    for d in map(Path, dirs):
        for name, plot in PLOTS.items():
            path = d / name
            if path.exists():
                fig = plot(path)
                fig.savefig(path.with_suffix(".png"), dpi=150, bbox_inches="tight")
                plt.close(fig)
                print(path.with_suffix(".png"))


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])
