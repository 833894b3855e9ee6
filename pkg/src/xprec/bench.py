"""Planted-structure ranking benchmark shared by the CLI and experiments.

Builds train/test splits from generated session logs, provides the
rules-driven heuristic baseline, and runs encoder/loss configuration grids
with multi-seed medians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, load_catalog
from .mining import AssociationRule, load_rules
from .ranker import (
    PersonaAffinity,
    RankerConfig,
    TrainingExample,
    evaluate,
    heuristic_baseline_rank,
    label_sessions,
    rank_with_model,
    train,
)
from .retrieval import HashNgramEmbedder
from .scoring import ScoredCandidate
from .synth import load_personas, load_sessions

# Rows of the architecture/loss grid: (tag, encoder, cross_attention, loss).
ABLATION_GRID = [
    ("identity+pairwise", "identity", False, "pairwise_hinge"),
    ("identity+listwise", "identity", False, "listwise_softmax"),
    ("bilstm+listwise", "bilstm", False, "listwise_softmax"),
    ("transformer+listwise", "transformer", False, "listwise_softmax"),
    ("transformer+xattn+pairwise", "transformer", True, "pairwise_hinge"),
    ("transformer+xattn+listwise", "transformer", True, "listwise_softmax"),
]


@dataclass
class Benchmark:
    catalog: Catalog
    embedder: HashNgramEmbedder
    train_examples: list[TrainingExample]
    test_examples: list[TrainingExample]
    affinity: PersonaAffinity
    anchor_pt_of_gm_pt: dict[str, str]

    def baseline_rank(self, ex: TrainingExample) -> list[str]:
        pool = sorted(ex.positives | ex.negatives)
        cands = []
        for item_id in pool:
            pt = self.catalog.pt_of(item_id)
            cands.append(ScoredCandidate(
                anchor_item_id=self.anchor_pt_of_gm_pt.get(pt, pt),
                item_id=item_id, source="mba", llm_rec=""))
        return heuristic_baseline_rank(ex.cart, cands, ex.cart.persona,
                                       self.catalog, self.affinity)


def anchor_map_from_rules(rules: list[AssociationRule]) -> dict[str, str]:
    """Best (highest-lift) OG anchor PT for each GM rec PT."""
    out: dict[str, str] = {}
    for rule in sorted(rules, key=lambda r: (-r.lift, r.anchor_pt, r.rec_pt)):
        out.setdefault(rule.rec_pt, rule.anchor_pt)
    return out


def build_benchmark(
    catalog_path: str,
    sessions_path: str,
    personas_path: str,
    rules_path: str,
    affinity_path: str,
    embed_dim: int = 32,
    embed_seed: int = 0,
    max_examples: int = 0,
    test_every: int = 5,
    label_seed: int = 0,
) -> Benchmark:
    catalog = load_catalog(catalog_path)
    sessions = load_sessions(sessions_path)
    personas = load_personas(personas_path)
    examples = label_sessions(sessions, catalog, personas, seed=label_seed)
    if max_examples and len(examples) > max_examples:
        head, rest = examples[:max_examples], examples[max_examples:]
    else:
        head, rest = examples, []
    train_ex = [e for i, e in enumerate(head) if i % test_every != 0]
    # Examples beyond the training cap still make valid held-out data;
    # folding them into the test split tightens the NDCG estimates for free.
    test_ex = [e for i, e in enumerate(head) if i % test_every == 0] + rest

    with open(affinity_path, encoding="utf-8") as fh:
        affinity = PersonaAffinity(json.load(fh))
    rules = load_rules(rules_path)

    return Benchmark(
        catalog=catalog,
        embedder=HashNgramEmbedder(dim=embed_dim, seed=embed_seed),
        train_examples=train_ex,
        test_examples=test_ex,
        affinity=affinity,
        anchor_pt_of_gm_pt=anchor_map_from_rules(rules),
    )


def run_config(
    bench: Benchmark,
    encoder: str,
    cross_attention: bool,
    loss: str,
    seed: int,
    epochs: int = 3,
    batch: int = 8,
    lr: float = 1e-3,
) -> dict[int, float]:
    """Train one configuration and return mean test NDCG@{2,4,6}."""
    config = RankerConfig.desk(encoder=encoder, cross_attention=cross_attention,
                               loss=loss, seed=seed, epochs=epochs, batch=batch, lr=lr)
    model, _ = train(bench.train_examples, config, bench.catalog, bench.embedder)
    report = evaluate(model, bench.baseline_rank, bench.test_examples)
    return {k: report.overall.model_ndcg[k] for k in report.ks}


def ablate_grid(
    bench: Benchmark,
    seeds: list[int],
    epochs: int = 3,
    batch: int = 8,
) -> list[tuple[str, dict[int, float]]]:
    """Median test NDCG over seeds for every grid row, grid order preserved."""
    rows = []
    for tag, encoder, cross, loss in ABLATION_GRID:
        per_seed = [run_config(bench, encoder, cross, loss, seed, epochs=epochs, batch=batch)
                    for seed in seeds]
        median = {k: float(np.median([r[k] for r in per_seed])) for k in (2, 4, 6)}
        rows.append((tag, median))
    return rows


def baseline_ndcg(bench: Benchmark) -> dict[int, float]:
    from .ranker import ndcg_at_k
    out = {}
    for k in (2, 4, 6):
        out[k] = float(np.mean([
            ndcg_at_k(bench.baseline_rank(ex), set(ex.positives), k)
            for ex in bench.test_examples
        ]))
    return out
