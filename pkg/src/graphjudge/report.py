"""Report rendering: score tables, CSVs, and matplotlib figures."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from graphjudge.corpus_io import CorpusStats, _atomic_write
from graphjudge.metrics import GraphScoreReport

_COLUMNS = [
    "G-BS-acc", "G-BS-recall", "G-BS-f1",
    "G-BL-acc", "G-BL-recall", "G-BL-f1",
    "G-RO-acc", "G-RO-recall", "G-RO-f1",
]


def report_table(report: GraphScoreReport) -> str:
    """Fixed-width text table: one row per graph plus the macro average."""
    header = f"{'pair_id':<20}" + "".join(f"{c:>13}" for c in _COLUMNS)
    lines = [header, "-" * len(header)]
    for row in report.rows + [report.macro]:
        d = row.as_dict()
        lines.append(
            f"{d['pair_id']:<20}" + "".join(f"{d[c]:>13.4f}" for c in _COLUMNS)
        )
    return "\n".join(lines) + "\n"


def save_score_figure(report: GraphScoreReport, path: str | Path) -> None:
    """Bar chart of the nine macro scores."""
    d = report.macro.as_dict()
    values = [d[c] for c in _COLUMNS]
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.bar(range(len(_COLUMNS)), values, color="steelblue")
    ax.set_xticks(range(len(_COLUMNS)))
    ax.set_xticklabels(_COLUMNS, rotation=45, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Macro graph scores")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_stats_outputs(stats: CorpusStats, out_dir: str | Path) -> None:
    """Distribution CSVs plus a two-panel histogram figure."""
    out = Path(out_dir)
    tpg, lens = stats.as_rows()
    _write_csv(out / "triples_per_graph.csv", ["triples", "graphs"], tpg)
    _write_csv(out / "doc_token_lengths.csv", ["tokens", "documents"], lens)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    if tpg:
        axes[0].bar([k for k, _ in tpg], [v for _, v in tpg], color="steelblue")
    axes[0].set_xlabel("triples per graph")
    axes[0].set_ylabel("graphs")
    if lens:
        axes[1].bar([k for k, _ in lens], [v for _, v in lens], color="indianred")
    axes[1].set_xlabel("document tokens")
    axes[1].set_ylabel("documents")
    fig.suptitle(f"{stats.pairs} pairs, {stats.triples} triples")
    fig.tight_layout()
    fig.savefig(out / "stats.png")
    plt.close(fig)


def save_relevance_outputs(matrix: np.ndarray, row_labels: list[str],
                           out_dir: str | Path, stem: str) -> None:
    """Relevance matrix as CSV plus a heat-map figure."""
    out = Path(out_dir)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["triple"] + [f"chunk_{i}" for i in range(matrix.shape[1])])
    for label, row in zip(row_labels, matrix):
        writer.writerow([label] + [f"{v:.6f}" for v in row])
    _atomic_write(out / f"{stem}.csv", buf.getvalue())

    fig, ax = plt.subplots(figsize=(10, max(3, 0.4 * len(row_labels))))
    im = ax.imshow(matrix, aspect="auto", cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_yticks(range(len(row_labels)))
    ax.set_yticklabels(row_labels, fontsize=7)
    ax.set_xlabel("document chunk")
    fig.colorbar(im, ax=ax, label="cosine similarity")
    fig.tight_layout()
    fig.savefig(out / f"{stem}.png")
    plt.close(fig)


def _write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())
