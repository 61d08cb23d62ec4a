#!/usr/bin/env python3
"""Plot reconstruction outputs written by `nlsrecon invert` / `phantom` / `diagnose`.

    python scripts/plot_results.py OUTPUT_DIR NAME [--truth PHANTOM_CSV] [--out FIG_DIR]

Reads NAME_u0.csv, NAME_metrics.csv and, when present, NAME_truncation.csv and
NAME_carleman.csv. Writes PNGs to FIG_DIR (default OUTPUT_DIR).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def grid_field(path):
    df = pd.read_csv(path)
    n = int(round(np.sqrt(len(df))))
    if n * n != len(df):
        raise SystemExit(f"{path}: {len(df)} rows is not a square grid")
    x = df["x"].to_numpy().reshape(n, n)
    y = df["y"].to_numpy().reshape(n, n)
    u = (df["re"] + 1j * df["im"]).to_numpy().reshape(n, n)
    return x, y, u


def plot_fields(fields, out):
    fig, axes = plt.subplots(len(fields), 2, figsize=(8, 3.6 * len(fields)), squeeze=False)
    for row, (label, (x, y, u)) in enumerate(fields):
        for col, (part, vals) in enumerate((("Re", u.real), ("Im", u.imag))):
            ax = axes[row][col]
            im = ax.pcolormesh(x, y, vals, shading="auto", cmap="viridis")
            ax.set_aspect("equal")
            ax.set_title(f"{label}: {part} u0")
            fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def plot_metrics(path, out):
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.semilogy(df["iter"] + 1, df["rel_change"].clip(lower=1e-17), "o-", label="relative change")
    ax.semilogy(df["iter"] + 1, df["residual"].clip(lower=1e-17), "s-", label="residual")
    ax.set_xlabel("Picard iteration k")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def plot_diagnostics(trunc, carl, out):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    if trunc.exists():
        df = pd.read_csv(trunc)
        axes[0].semilogy(df["n_modes"], df["tail_norm"].clip(lower=1e-17), "o-")
        axes[0].set_xlabel("N")
        axes[0].set_title("truncation tail")
    if carl.exists():
        df = pd.read_csv(carl)
        axes[1].loglog(df["lambda"], df["ratio"], "o-")
        axes[1].set_xlabel("lambda")
        axes[1].set_title("Carleman ratio")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("output_dir", type=Path)
    ap.add_argument("name")
    ap.add_argument("--truth", type=Path, help="phantom grid CSV to show beside the reconstruction")
    ap.add_argument("--out", type=Path, help="figure directory (default: output_dir)")
    a = ap.parse_args()

    figdir = a.out or a.output_dir
    figdir.mkdir(parents=True, exist_ok=True)
    base = a.output_dir / a.name

    written = []
    fields = []
    if a.truth:
        fields.append(("truth", grid_field(a.truth)))
    u0 = Path(f"{base}_u0.csv")
    if u0.exists():
        fields.append(("reconstruction", grid_field(u0)))
    if fields:
        plot_fields(fields, figdir / f"{a.name}_u0.png")
        written.append(figdir / f"{a.name}_u0.png")
    metrics = Path(f"{base}_metrics.csv")
    if metrics.exists():
        plot_metrics(metrics, figdir / f"{a.name}_convergence.png")
        written.append(figdir / f"{a.name}_convergence.png")
    trunc, carl = Path(f"{base}_truncation.csv"), Path(f"{base}_carleman.csv")
    if trunc.exists() or carl.exists():
        plot_diagnostics(trunc, carl, figdir / f"{a.name}_diagnostics.png")
        written.append(figdir / f"{a.name}_diagnostics.png")
    if not written:
        raise SystemExit(f"no outputs found for '{a.name}' in {a.output_dir}")
    for w in written:
        print(w)


if __name__ == "__main__":
    main()
