"""Command-line orchestrator for the cross-category recommendation pipeline.

Data flows through a working directory: `xp gen` seeds it, and each later
stage reads the standard filenames and writes its artifacts next to them.
Every command ends with one machine-readable summary line.
"""

from __future__ import annotations

import json
import os
import sys
from collections import Counter

import click

from . import llm as llm_mod
from .bench import ABLATION_GRID, ablate_grid, baseline_ndcg, build_benchmark
from .catalog import load_catalog, popular_items_in_pt
from .mining import (
    build_baskets,
    copurchase_candidates,
    export_rules,
    load_rules,
    load_transactions,
    mine_pt_associations,
)
from .ranker import RankerConfig, evaluate, load_ranker, train
from .report import build_report
from .retrieval import (
    EmbeddingCrossScorer,
    HashNgramEmbedder,
    PipelineConfig,
    PipelineDeps,
    PopularSamePtSimilar,
    build_store,
    export_candidates,
    load_candidates,
    save_store,
    score_recs_for_anchor,
)
from .serving import ServiceConfig, run_server
from .synth import SynthConfig, gen_synth, load_truth

FILES = {
    "catalog": "catalog.jsonl",
    "transactions": "transactions.jsonl",
    "sessions": "sessions.jsonl",
    "personas": "personas.json",
    "truth": "truth.json",
    "affinity": "persona_affinity.json",
    "rules": "rules.tsv",
    "popularity": "popularity.json",
    "llm_recs": "llm_recs.jsonl",
    "store": "store.xpes",
    "candidates": "candidates.jsonl",
    "checkpoint": "ranker.ckpt",
}


def _path(data_dir: str, key: str) -> str:
    return os.path.join(data_dir, FILES[key])


def _load_catalog_with_popularity(data_dir: str):
    catalog = load_catalog(_path(data_dir, "catalog"))
    pop_path = _path(data_dir, "popularity")
    if os.path.exists(pop_path):
        with open(pop_path, encoding="utf-8") as fh:
            catalog.set_popularity({k: float(v) for k, v in json.load(fh).items()})
    return catalog


def _chat_client(fixtures: str, endpoint: str, record: bool, catalog):
    rec_vocab = sorted(item.title for item in catalog.items.values()
                       if item.segment == "GM")
    scripted = llm_mod.ScriptedChatClient(rec_vocab=rec_vocab)
    if endpoint:
        return llm_mod.HttpChatClient(url=endpoint)
    if fixtures:
        return llm_mod.FixtureChatClient(fixtures, fallback=scripted if record else None)
    return scripted


def _summary(command: str, **kv) -> None:
    parts = " ".join(f"{k}={v}" for k, v in kv.items())
    click.echo(f"{command} ok {parts}")


@click.group()
def main():
    """Cross-category recommendation pipeline."""


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=1, type=int)
@click.option("--customers", default=2000, type=int)
@click.option("--og-items", default=400, type=int)
@click.option("--gm-items", default=400, type=int)
@click.option("--pts", default=20, type=int)
@click.option("--pairs", default=20, type=int)
@click.option("--sessions", default=1500, type=int)
def gen(out, seed, customers, og_items, gm_items, pts, pairs, sessions):
    """Generate the synthetic benchmark dataset."""
    config = SynthConfig(seed=seed, n_customers=customers, n_og_items=og_items,
                         n_gm_items=gm_items, n_pts_per_side=pts,
                         n_planted_pairs=pairs, n_sessions=sessions)
    paths = gen_synth(config, out)
    _summary("gen", seed=seed, files=len(paths), out=out)


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--min-support", default=0.0005, type=float)
@click.option("--min-confidence", default=0.01, type=float)
@click.option("--window-days", default=21, type=int)
def mine(data, min_support, min_confidence, window_days):
    """Mine OG->GM product-type association rules from transactions."""
    catalog = load_catalog(_path(data, "catalog"))
    txns = load_transactions(_path(data, "transactions"))
    baskets = build_baskets(txns, window_days=window_days)
    rules = mine_pt_associations(baskets, catalog, min_support=min_support,
                                 min_confidence=min_confidence)
    export_rules(rules, _path(data, "rules"))
    counts = Counter(t.item_id for t in txns)
    with open(_path(data, "popularity"), "w", encoding="utf-8") as fh:
        json.dump(dict(sorted(counts.items())), fh, sort_keys=True)
    _summary("mine", baskets=len(baskets), rules=len(rules),
             out=_path(data, "rules"))


@main.command(name="llm-run")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--fixtures", default="", type=click.Path())
@click.option("--endpoint", default="")
@click.option("--record", is_flag=True,
              help="With --fixtures: fill missing fixtures from the scripted client.")
@click.option("--anchors", default=20, type=int,
              help="Number of most popular OG anchors to process.")
@click.option("--gen-threshold", default=0.4, type=float)
def llm_run(data, fixtures, endpoint, record, anchors, gen_threshold):
    """Run the generation agents (themes, recs, generation evaluator)."""
    catalog = _load_catalog_with_popularity(data)
    chat = _chat_client(fixtures, endpoint, record, catalog)

    og_items = [catalog.items[i] for i in sorted(catalog.items)
                if catalog.items[i].segment == "OG"]
    og_items.sort(key=lambda it: (-catalog.popularity.get(it.item_id, 0.0), it.item_id))
    picked = og_items[:anchors]

    n_recs = n_kept = 0
    with open(_path(data, "llm_recs"), "w", encoding="utf-8") as fh:
        for anchor in picked:
            themes = llm_mod.generate_themes(anchor, chat)
            recs = llm_mod.generate_theme_recs(anchor, themes, chat)
            for rec in recs:
                llm_mod.evaluate_generation(rec, anchor, chat)
            kept = llm_mod.filter_generated(recs, gen_threshold)
            n_recs += len(recs)
            n_kept += len(kept)
            for rec in kept:
                fh.write(json.dumps({
                    "anchor_item_id": rec.anchor_item_id,
                    "theme_label": rec.theme_label,
                    "rec_text": rec.rec_text,
                    "explanation": rec.explanation,
                    "gen_score": rec.gen_score,
                }, sort_keys=True) + "\n")
    _summary("llm-run", anchors=len(picked), recs=n_recs, kept=n_kept,
             out=_path(data, "llm_recs"))


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--fixtures", default="", type=click.Path())
@click.option("--endpoint", default="")
@click.option("--record", is_flag=True)
@click.option("--embed-dim", default=64, type=int)
@click.option("--embed-seed", default=0, type=int)
@click.option("--k-retrieve", default=10, type=int)
@click.option("--sim-floor", default=0.3, type=float)
@click.option("--per-pt-k", default=10, type=int)
def retrieve(data, fixtures, endpoint, record, embed_dim, embed_seed,
             k_retrieve, sim_floor, per_pt_k):
    """Map generated rec texts to catalog items and score candidates."""
    catalog = _load_catalog_with_popularity(data)
    chat = _chat_client(fixtures, endpoint, record, catalog)
    embedder = HashNgramEmbedder(dim=embed_dim, seed=embed_seed)
    store = build_store(catalog, embedder)
    save_store(store, _path(data, "store"))

    rules = load_rules(_path(data, "rules"))
    mba = copurchase_candidates(rules, catalog, per_pt_k)
    deps = PipelineDeps(
        catalog=catalog, store=store, embedder=embedder,
        cross=EmbeddingCrossScorer(embedder), chat=chat,
        mba_candidates=mba, similar=PopularSamePtSimilar(catalog),
        judge_cache=llm_mod.JudgeCache(),
    )
    config = PipelineConfig(k_retrieve=k_retrieve, sim_floor=sim_floor)

    by_anchor: dict[str, list] = {}
    with open(_path(data, "llm_recs"), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw = json.loads(line)
                by_anchor.setdefault(raw["anchor_item_id"], []).append(
                    llm_mod.LlmRecommendation(**raw))

    all_cands = []
    for anchor_id in sorted(by_anchor):
        anchor = catalog[anchor_id]
        all_cands.extend(score_recs_for_anchor(anchor, by_anchor[anchor_id],
                                               deps, config))
    export_candidates(all_cands, _path(data, "candidates"))
    _summary("retrieve", anchors=len(by_anchor), candidates=len(all_cands),
             judge_calls=deps.judge_cache.client_calls,
             out=_path(data, "candidates"))


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--out", default="", type=click.Path())
def report(data, out):
    """Quality tables over the scored candidate set."""
    catalog = load_catalog(_path(data, "catalog"))
    candidates = load_candidates(_path(data, "candidates"))
    out = out or os.path.join(data, "report")
    quality = build_report(candidates, catalog)
    paths = quality.write(out)
    click.echo(quality.to_text())
    _summary("report", candidates=len(candidates), files=len(paths), out=out)


def _bench(data, max_examples, embed_dim=32, embed_seed=0):
    return build_benchmark(
        _path(data, "catalog"), _path(data, "sessions"), _path(data, "personas"),
        _path(data, "rules"), _path(data, "affinity"),
        embed_dim=embed_dim, embed_seed=embed_seed, max_examples=max_examples,
    )


@main.command(name="train")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--encoder", default="transformer",
              type=click.Choice(["transformer", "identity", "bilstm"]))
@click.option("--loss", default="listwise_softmax",
              type=click.Choice(["listwise_softmax", "pairwise_hinge"]))
@click.option("--cross/--no-cross", "cross_attention", default=True)
@click.option("--epochs", default=10, type=int)
@click.option("--batch", default=8, type=int)
@click.option("--lr", default=3e-3, type=float)
@click.option("--seed", default=0, type=int)
@click.option("--max-examples", default=800, type=int)
def train_cmd(data, encoder, loss, cross_attention, epochs, batch, lr, seed,
              max_examples):
    """Train the cart ranker on labeled sessions."""
    from .ranker import save_ranker

    bench = _bench(data, max_examples)
    config = RankerConfig.desk(encoder=encoder, loss=loss,
                               cross_attention=cross_attention, epochs=epochs,
                               batch=batch, lr=lr, seed=seed)
    model, trace = train(bench.train_examples, config, bench.catalog, bench.embedder)
    save_ranker(model, _path(data, "checkpoint"))
    split = {
        "train": [ex.cart.cart_id for ex in bench.train_examples],
        "test": [ex.cart.cart_id for ex in bench.test_examples],
    }
    with open(os.path.join(data, "split.json"), "w", encoding="utf-8") as fh:
        json.dump(split, fh, sort_keys=True)
    _summary("train", examples=len(bench.train_examples), epochs=epochs,
             params=model.param_count(), first_loss=f"{trace[0]:.6f}",
             final_loss=f"{trace[-1]:.6f}", ckpt=_path(data, "checkpoint"))


@main.command(name="eval")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_mode", is_flag=True,
              help="Check planted-pair recall of the mined rules instead.")
@click.option("--top", default=40, type=int)
@click.option("--max-examples", default=800, type=int)
def eval_cmd(data, rules_mode, top, max_examples):
    """Evaluate mined rules against truth, or the trained ranker vs baseline."""
    if rules_mode:
        rules = load_rules(_path(data, "rules"))
        truth = load_truth(_path(data, "truth"))
        planted = {(p.og_pt, p.gm_pt) for p in truth}
        mined_top = {(r.anchor_pt, r.rec_pt) for r in rules[:top]}
        recall = len(planted & mined_top) / len(planted) if planted else 0.0
        _summary("eval-rules", planted=len(planted), top=top,
                 recall=f"{recall:.4f}")
        return

    bench = _bench(data, max_examples)
    model = load_ranker(_path(data, "checkpoint"), bench.catalog, bench.embedder)
    rep = evaluate(model, bench.baseline_rank, bench.test_examples)
    text = rep.to_text()
    out_path = os.path.join(data, "eval_report.txt")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    click.echo(text)
    lift4 = rep.overall.lift_pct(4)
    _summary("eval", test=len(bench.test_examples),
             model_ndcg4=f"{rep.overall.model_ndcg[4]:.4f}",
             baseline_ndcg4=f"{rep.overall.baseline_ndcg[4]:.4f}",
             lift4=f"{lift4:.2f}%", out=out_path)


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--seeds", default=5, type=int)
@click.option("--epochs", default=10, type=int)
@click.option("--max-examples", default=800, type=int)
@click.option("--out", default="", type=click.Path())
def ablate(data, seeds, epochs, max_examples, out):
    """Architecture/loss grid with multi-seed median NDCG."""
    bench = _bench(data, max_examples)
    rows = ablate_grid(bench, seeds=list(range(seeds)), epochs=epochs)
    base = baseline_ndcg(bench)

    out = out or os.path.join(data, "ablation.csv")
    header = f"{'model':<30}{'ndcg@2':>10}{'ndcg@4':>10}{'ndcg@6':>10}"
    lines = [header]
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("model,ndcg2,ndcg4,ndcg6\n")
        for tag, med in rows + [("heuristic-baseline", base)]:
            fh.write(f"{tag},{med[2]:.6f},{med[4]:.6f},{med[6]:.6f}\n")
            lines.append(f"{tag:<30}{med[2]:>10.4f}{med[4]:>10.4f}{med[6]:>10.4f}")
    click.echo("\n".join(lines))
    _summary("ablate", rows=len(ABLATION_GRID), seeds=seeds, out=out)


@main.command()
@click.option("--config", "config_path", default="", type=click.Path())
@click.option("--data", default="", type=click.Path())
@click.option("--checkpoint", default="", type=click.Path())
@click.option("--port", default=8080, type=int)
@click.option("--max-per-pt", default=2, type=int)
def serve(config_path, data, checkpoint, port, max_per_pt):
    """Launch the recommendation HTTP service."""
    if config_path:
        config = ServiceConfig.load(config_path)
    else:
        if not data:
            raise click.UsageError("either --config or --data is required")
        config = ServiceConfig(
            port=port,
            catalog_path=_path(data, "catalog"),
            candidates_path=_path(data, "candidates"),
            checkpoint_path=checkpoint or (_path(data, "checkpoint")
                                           if os.path.exists(_path(data, "checkpoint")) else ""),
            personas_path=_path(data, "personas") if os.path.exists(_path(data, "personas")) else "",
            affinity_path=_path(data, "affinity") if os.path.exists(_path(data, "affinity")) else "",
            max_per_pt=max_per_pt,
        )
    if config.checkpoint_path and not os.path.exists(config.checkpoint_path):
        click.echo(f"error: checkpoint not found: {config.checkpoint_path}", err=True)
        sys.exit(2)
    if config.candidates_path and not os.path.exists(config.candidates_path):
        click.echo(f"error: candidates not found: {config.candidates_path}", err=True)
        sys.exit(2)
    _summary("serve", port=config.port,
             ranker=bool(config.checkpoint_path))
    run_server(config)


if __name__ == "__main__":
    main()
