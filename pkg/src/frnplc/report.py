"""Run manifests: JSON-first reports with CSV export and rendered figures."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

REPORT_SCHEMA = "report-v1"


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(command: str, config: dict, rows: list[dict],
                   seed: int | None = None,
                   weights_sha256: str | None = None) -> dict:
    """Assemble a reproducible run manifest with per-file rows and aggregates."""
    aggregate = {}
    if rows:
        numeric = [k for k, v in rows[0].items() if isinstance(v, (int, float))]
        for key in numeric:
            aggregate[key] = sum(r[key] for r in rows) / len(rows)
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "config": config,
        "seed": seed,
        "weights_sha256": weights_sha256,
        "files": rows,
        "aggregate": aggregate,
    }


def write_json(manifest: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(manifest: dict, path) -> None:
    """Per-file rows plus a final aggregate row labelled ``(mean)``."""
    rows = manifest["files"]
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    fields = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        mean_row = {f: manifest["aggregate"].get(f, "") for f in fields}
        mean_row[fields[0]] = "(mean)"
        writer.writerow(mean_row)


def render_metric_figures(manifest: dict, out_dir) -> list[str]:
    """Per-file bars and a histogram for every numeric metric column."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = manifest["files"]
    if not rows:
        return []
    names = [str(r.get("file", i)) for i, r in enumerate(rows)]
    written = []
    metrics = [k for k, v in rows[0].items() if isinstance(v, (int, float))]
    for metric in metrics:
        values = [r[metric] for r in rows]
        fig, (ax_bar, ax_hist) = plt.subplots(1, 2, figsize=(10, 4))
        ax_bar.bar(range(len(values)), values, color="#1f77b4")
        ax_bar.set_xticks(range(len(values)))
        ax_bar.set_xticklabels(names, rotation=90, fontsize=6)
        ax_bar.set_ylabel(metric)
        ax_bar.set_title(f"{metric} per file")
        ax_bar.axhline(manifest["aggregate"][metric], color="#d62728",
                       linestyle="--", label="mean")
        ax_bar.legend(fontsize=8)
        ax_hist.hist(values, bins=min(20, max(3, len(values))), color="#2ca02c")
        ax_hist.set_xlabel(metric)
        ax_hist.set_ylabel("files")
        ax_hist.set_title(f"{metric} distribution")
        fig.tight_layout()
        target = out_dir / f"{metric}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(str(target))
    return written


def render_bench_figure(report: dict, out_dir) -> str:
    """Latency summary figure for a benchmark report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = ["mean", "p50", "p95", "max"]
    values = [report["mean_hop_ms"], report["p50_hop_ms"],
              report["p95_hop_ms"], report["max_hop_ms"]]
    ax.bar(labels, values, color="#1f77b4")
    ax.axhline(report["hop_ms"], color="#d62728", linestyle="--",
               label=f"real-time budget ({report['hop_ms']:.0f} ms)")
    ax.set_ylabel("per-hop processing time (ms)")
    ax.set_title(f"RTF {report['rtf']:.3f} ({report['mode']})")
    ax.legend()
    fig.tight_layout()
    target = out_dir / "bench_latency.png"
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return str(target)
