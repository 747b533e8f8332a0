"""Figure rendering for campaign results.

Reads a campaign data CSV, aggregates it, and writes PNG figures next to a
summary CSV: mean SINR and SER against SNR for each antenna/sample-size
group, and SINR against sample size where the grid sweeps K.
"""

from __future__ import annotations

import csv
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import SUMMARY_COLUMNS, summarize

__all__ = ["render_report"]


def _load_summary(path):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "label": row["algorithm"] + (f":{row['variant']}" if row["variant"] else ""),
                    "M": int(row["M"]),
                    "N": int(row["N"]),
                    "K": int(row["K"]),
                    "snr_db": float(row["snr_db"]),
                    "mean_sinr_db": float(row["mean_sinr_db"]) if row["mean_sinr_db"] else math.nan,
                    "se_sinr_db": float(row["se_sinr_db"]) if row["se_sinr_db"] else 0.0,
                    "mean_ser": float(row["mean_ser"]) if row["mean_ser"] else math.nan,
                }
            )
    return rows


def _series(rows, x_key, y_key):
    """Group rows into {label: sorted (x, y, yerr) arrays}."""
    out = {}
    for r in rows:
        out.setdefault(r["label"], []).append(
            (r[x_key], r[y_key], r.get("se_sinr_db", 0.0))
        )
    for label in out:
        out[label].sort()
    return out


def render_report(data_csv, out_dir):
    """Render figures (and the summary CSV) for a campaign results file.

    Returns the list of written file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    summary_csv = os.path.join(out_dir, "summary.csv")
    summarize(data_csv, summary_csv)
    rows = _load_summary(summary_csv)
    written = [summary_csv]

    by_mnk = {}
    for r in rows:
        by_mnk.setdefault((r["M"], r["N"], r["K"]), []).append(r)
    for (m, n, k), grp in sorted(by_mnk.items()):
        if len({r["snr_db"] for r in grp}) < 2:
            continue
        stem = f"M{m}_N{n}_K{k}"
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        for label, pts in sorted(_series(grp, "snr_db", "mean_sinr_db").items()):
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            es = [p[2] for p in pts]
            ax.errorbar(xs, ys, yerr=es, marker="o", capsize=2, label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("mean SINR (dB)")
        ax.set_title(f"M={m}, N={n}, K={k}")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, f"sinr_vs_snr_{stem}.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        any_ser = False
        for label, pts in sorted(_series(grp, "snr_db", "mean_ser").items()):
            xs = [p[0] for p in pts]
            ys = [max(p[1], 1e-7) if not math.isnan(p[1]) else math.nan for p in pts]
            if any(not math.isnan(y) for y in ys):
                any_ser = True
            ax.semilogy(xs, ys, marker="o", label=label)
        if any_ser:
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("mean SER")
            ax.set_title(f"M={m}, N={n}, K={k}")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()
            path = os.path.join(out_dir, f"ser_vs_snr_{stem}.png")
            fig.savefig(path, dpi=150, bbox_inches="tight")
            written.append(path)
        plt.close(fig)

    by_mns = {}
    for r in rows:
        by_mns.setdefault((r["M"], r["N"], r["snr_db"]), []).append(r)
    for (m, n, snr), grp in sorted(by_mns.items()):
        if len({r["K"] for r in grp}) < 2:
            continue
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        for label, pts in sorted(_series(grp, "K", "mean_sinr_db").items()):
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel("sample size K")
        ax.set_ylabel("mean SINR (dB)")
        ax.set_title(f"M={m}, N={n}, SNR={snr:g} dB")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, f"sinr_vs_K_M{m}_N{n}_SNR{snr:g}.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
