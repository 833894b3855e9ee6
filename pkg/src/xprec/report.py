"""Aggregate quality tables over scored candidate sets.

One aggregation pass produces: band distribution per category, top/bottom
product types by mean CE / LLM / combined score, the largest CE-vs-LLM
disagreements, and the share of poor-quality generations. Tables are emitted
as aligned text and CSV.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog
from .scoring import QualityBand, ScoredCandidate

BAND_NAMES = [b.name for b in QualityBand]


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def to_text(self) -> str:
        widths = [len(c) for c in self.columns]
        rendered = [[_fmt(v) for v in row] for row in self.rows]
        for row in rendered:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))
        lines = [f"# {self.name}"]
        lines.append("  ".join(c.ljust(w) for c, w in zip(self.columns, widths)))
        for row in rendered:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(v) for v in row])


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


@dataclass
class QualityReport:
    tables: list[Table]

    def to_text(self) -> str:
        return "\n\n".join(t.to_text() for t in self.tables)

    def write(self, out_dir: str) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        text_path = os.path.join(out_dir, "quality_report.txt")
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text() + "\n")
        paths.append(text_path)
        for table in self.tables:
            slug = table.name.lower().replace(" ", "_").replace("/", "_")
            path = os.path.join(out_dir, f"{slug}.csv")
            table.write_csv(path)
            paths.append(path)
        return paths


def build_report(candidates: list[ScoredCandidate], catalog: Catalog,
                 top_n: int = 10) -> QualityReport:
    scored = [c for c in candidates if c.combined is not None]

    by_category: dict[str, list[ScoredCandidate]] = defaultdict(list)
    by_pt: dict[str, list[ScoredCandidate]] = defaultdict(list)
    for cand in scored:
        item = catalog.get(cand.item_id)
        by_category[item.category if item else "?"].append(cand)
        by_pt[item.product_type if item else "?"].append(cand)

    # Band distribution per category (percentages).
    dist = Table("band distribution by category",
                 ["category", "n"] + BAND_NAMES)
    for cat_name in sorted(by_category):
        group = by_category[cat_name]
        counts = {b: 0 for b in BAND_NAMES}
        for cand in group:
            counts[cand.band.name] += 1
        dist.rows.append([cat_name, len(group)] +
                         [100.0 * counts[b] / len(group) for b in BAND_NAMES])

    # Product types ranked by mean scores.
    pt_means = []
    for pt in sorted(by_pt):
        group = by_pt[pt]
        pt_means.append((
            pt, len(group),
            float(np.mean([c.ce_score for c in group])),
            float(np.mean([c.llm_score for c in group])),
            float(np.mean([c.combined for c in group])),
        ))
    pt_means.sort(key=lambda r: (-r[4], r[0]))
    top = Table("top product types by combined score",
                ["product_type", "n", "ce_mean", "llm_mean", "combined_mean"])
    top.rows = [list(r) for r in pt_means[:top_n]]
    bottom = Table("bottom product types by combined score",
                   ["product_type", "n", "ce_mean", "llm_mean", "combined_mean"])
    bottom.rows = [list(r) for r in pt_means[-top_n:][::-1]]

    # Largest |CE - LLM| disagreements.
    disagreements = sorted(
        scored, key=lambda c: (-abs(c.ce_score - c.llm_score), c.item_id)
    )[:top_n]
    dis = Table("largest ce/llm disagreement",
                ["anchor", "item_id", "ce", "llm", "combined", "gap"])
    for cand in disagreements:
        dis.rows.append([cand.anchor_item_id, cand.item_id, cand.ce_score,
                         cand.llm_score, cand.combined,
                         abs(cand.ce_score - cand.llm_score)])

    # Poor-rate summary.
    n_poor = sum(1 for c in scored if c.band == QualityBand.Poor)
    summary = Table("summary", ["metric", "value"])
    summary.rows = [
        ["candidates_scored", len(scored)],
        ["candidates_total", len(candidates)],
        ["pct_poor", 100.0 * n_poor / len(scored) if scored else 0.0],
        ["pct_excellent", 100.0 * sum(1 for c in scored if c.band == QualityBand.Excellent)
            / len(scored) if scored else 0.0],
        ["combined_mean", float(np.mean([c.combined for c in scored])) if scored else 0.0],
    ]

    return QualityReport([dist, top, bottom, dis, summary])
