"""Report files: run JSON, failure list, method x split tables and a bar chart."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from temporal_qa.metrics import EvalReport


def _columns(reports: Sequence[EvalReport]) -> list[str]:
    cols: dict[str, None] = {}
    for r in reports:
        for g in r.groups():
            cols.setdefault(g)
    return list(cols)


def table_rows(reports: Sequence[EvalReport]) -> tuple[list[str], list[list[str]]]:
    cols = _columns(reports)
    header = ["Method"] + [f"{c} {m}" for c in cols for m in ("SEM", "F1")]
    rows = []
    for r in reports:
        groups = r.groups()
        row = [r.method]
        for c in cols:
            if c in groups:
                sem, f1, _ = groups[c]
                row += [f"{sem:.2f}", f"{f1:.2f}"]
            else:
                row += ["-", "-"]
        rows.append(row)
    return header, rows


def render_table(reports: Sequence[EvalReport]) -> str:
    header, rows = table_rows(reports)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    fmt = lambda cells: "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    lines = [fmt(header), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def render_tsv(reports: Sequence[EvalReport]) -> str:
    header, rows = table_rows(reports)
    return "\n".join("\t".join(r) for r in [header, *rows]) + "\n"


def plot_reports(reports: Sequence[EvalReport], path: Path) -> Path:
    """Grouped bar chart of SEM and F1 per method for each split column."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    cols = _columns(reports)
    fig, axes = plt.subplots(1, 2, figsize=(4 + 1.6 * len(cols) * len(reports) ** 0.5, 3.2),
                             sharey=True, squeeze=False)
    x = np.arange(len(cols))
    width = 0.8 / max(len(reports), 1)
    for ax, (metric, idx) in zip(axes[0], (("SEM", 0), ("F1", 1))):
        for k, r in enumerate(reports):
            groups = r.groups()
            vals = [groups[c][idx] if c in groups else np.nan for c in cols]
            ax.bar(x + (k - (len(reports) - 1) / 2) * width, vals, width, label=r.method)
        ax.set_xticks(x)
        ax.set_xticklabels(cols)
        ax.set_title(metric)
        ax.set_ylim(0, 100)
        ax.grid(axis="y", alpha=0.3)
    axes[0][0].set_ylabel("score (%)")
    handles, labels = axes[0][0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower center", ncol=min(len(reports), 4), fontsize=7,
               frameon=False)
    fig.tight_layout(rect=(0, 0.06 + 0.04 * ((len(reports) - 1) // 4), 1, 1))
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def dump_report(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text("utf-8")))


def emit_report(report: EvalReport, out_dir: str | Path, figure: bool = True) -> dict[str, Path]:
    """Write ``report.json``, ``failures.json``, ``table.md``, ``table.tsv`` and ``scores.png``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "report": out / "report.json",
        "failures": out / "failures.json",
        "table": out / "table.md",
        "tsv": out / "table.tsv",
    }
    files["report"].write_text(dump_report(report), "utf-8")
    files["failures"].write_text(json.dumps(report.failures, indent=2, ensure_ascii=False) + "\n", "utf-8")
    files["table"].write_text(render_table([report]), "utf-8")
    files["tsv"].write_text(render_tsv([report]), "utf-8")
    if figure:
        files["figure"] = plot_reports([report], out / "scores.png")
    return files
