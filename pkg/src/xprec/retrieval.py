"""Embedding store, cosine k-NN item matching, similar-item expansion,
cross-encoder scoring, and the end-to-end per-anchor candidate pipeline."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from . import llm as llm_mod
from .catalog import Catalog, ItemRecord, popular_items_in_pt
from .errors import DimensionMismatch
from .scoring import QualityBand, ScoredCandidate

MAGIC = b"XPES"
VERSION = 1


# ---------------------------------------------------------------------------
# Text embedding
# ---------------------------------------------------------------------------

class TextEmbedder:
    """Interface: embed(text) -> unit vector of fixed dimension."""

    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashNgramEmbedder(TextEmbedder):
    """Seeded character-3-gram hashing embedder.

    Each token is padded and split into 3-grams; every gram is hashed into
    one of `dim` signed buckets and the bucket vector is L2-normalized.
    Similar strings share grams and therefore land near each other.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim
        self._key = str(seed).encode()

    def _bucket(self, gram: str) -> tuple[int, float]:
        h = hashlib.blake2b(gram.encode("utf-8"), key=self._key, digest_size=8).digest()
        value = int.from_bytes(h, "big")
        return value % self.dim, 1.0 if (value >> 63) & 1 else -1.0

    def embed(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.float64)
        for token in text.lower().split():
            padded = f"^{token}$"
            for i in range(len(padded) - 2):
                idx, sign = self._bucket(padded[i:i + 3])
                v[idx] += sign
        norm = np.linalg.norm(v)
        if norm == 0:
            v[0] = 1.0
            return v
        return v / norm


# ---------------------------------------------------------------------------
# Embedding store
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingStore:
    dim: int
    ids: list[str] = field(default_factory=list)
    matrix: np.ndarray = None  # |ids| x dim, unit rows, float32

    def __post_init__(self):
        if self.matrix is None:
            self.matrix = np.zeros((0, self.dim), dtype=np.float32)

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, item_id: str) -> np.ndarray:
        return self.matrix[self.ids.index(item_id)]


def build_store(catalog: Catalog, embedder: TextEmbedder) -> EmbeddingStore:
    """Embed every item's text + hierarchy metadata into unit rows."""
    ids = sorted(catalog.items)
    rows = np.zeros((len(ids), embedder.dim), dtype=np.float32)
    for i, item_id in enumerate(ids):
        rows[i] = embedder.embed(catalog[item_id].text)
    return EmbeddingStore(dim=embedder.dim, ids=ids, matrix=rows)


def save_store(store: EmbeddingStore, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, store.dim, len(store.ids)))
        for i, item_id in enumerate(store.ids):
            raw = item_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(store.matrix[i].astype("<f4").tobytes())


def load_store(path: str) -> EmbeddingStore:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not an embedding store file")
        version, dim, count = struct.unpack("<III", fh.read(12))
        if version != VERSION:
            raise ValueError(f"unsupported store version {version}")
        ids = []
        matrix = np.zeros((count, dim), dtype=np.float32)
        for i in range(count):
            (id_len,) = struct.unpack("<H", fh.read(2))
            ids.append(fh.read(id_len).decode("utf-8"))
            matrix[i] = np.frombuffer(fh.read(4 * dim), dtype="<f4")
    return EmbeddingStore(dim=dim, ids=ids, matrix=matrix)


def knn(
    store: EmbeddingStore,
    query: np.ndarray,
    k: int,
    segment_filter: str | None = None,
    catalog: Catalog | None = None,
) -> list[tuple[str, float]]:
    """Exact brute-force top-k by cosine, descending, id ascending on ties."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (store.dim,):
        raise DimensionMismatch(f"query dim {query.shape} vs store dim {store.dim}")
    if segment_filter is not None and catalog is None:
        raise ValueError("segment_filter requires a catalog")
    sims = store.matrix.astype(np.float64) @ query
    scored = [
        (item_id, float(sims[i]))
        for i, item_id in enumerate(store.ids)
        if segment_filter is None or catalog[item_id].segment == segment_filter
    ]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


# ---------------------------------------------------------------------------
# Similar-item expansion and cross-encoder scoring
# ---------------------------------------------------------------------------

class SimilarItems:
    """Interface: neighbors(item_id, k) -> list of item_id."""

    def neighbors(self, item_id: str, k: int) -> list[str]:
        raise NotImplementedError


class PopularSamePtSimilar(SimilarItems):
    """Default stub: most popular peers within the item's own PT."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog

    def neighbors(self, item_id: str, k: int) -> list[str]:
        if k < 1:
            return []
        pt = self.catalog.pt_of(item_id)
        peers = [i for i in popular_items_in_pt(self.catalog, pt, k + 1) if i != item_id]
        return peers[:k]


def expand_similar(items: list[str], sim_model: SimilarItems, per_item: int) -> list[str]:
    """Union of per-item neighbors, deduplicated, source items excluded."""
    if per_item <= 0:
        return []
    seen = set(items)
    out = []
    for item_id in items:
        for nb in sim_model.neighbors(item_id, per_item):
            if nb not in seen:
                seen.add(nb)
                out.append(nb)
    return out


class CrossScorer:
    """Interface: score(rec_text, item_text) -> relevance in [0, 1]."""

    def score(self, rec_text: str, item_text: str) -> float:
        raise NotImplementedError


class EmbeddingCrossScorer(CrossScorer):
    """Default stub: shifted cosine of the two text embeddings."""

    def __init__(self, embedder: TextEmbedder):
        self.embedder = embedder

    def score(self, rec_text: str, item_text: str) -> float:
        cos = float(self.embedder.embed(rec_text) @ self.embedder.embed(item_text))
        return min(1.0, max(0.0, (cos + 1.0) / 2.0))


# ---------------------------------------------------------------------------
# Per-anchor pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineDeps:
    catalog: Catalog
    store: EmbeddingStore
    embedder: TextEmbedder
    cross: CrossScorer
    chat: llm_mod.ChatClient
    mba_candidates: dict[str, list[ScoredCandidate]] = field(default_factory=dict)
    similar: SimilarItems | None = None
    judge_cache: llm_mod.JudgeCache | None = None


@dataclass
class PipelineConfig:
    gen_threshold: float = 0.4
    k_retrieve: int = 10
    sim_floor: float = 0.3
    per_item_similar: int = 2


def _interleave(primary: list[ScoredCandidate], secondary: list[ScoredCandidate]) -> list[ScoredCandidate]:
    """Round-robin merge, primary first, skipping duplicate item ids."""
    out: list[ScoredCandidate] = []
    seen: set[str] = set()
    i = j = 0
    take_primary = True
    while i < len(primary) or j < len(secondary):
        if take_primary and i < len(primary):
            cand = primary[i]; i += 1
        elif j < len(secondary):
            cand = secondary[j]; j += 1
        elif i < len(primary):
            cand = primary[i]; i += 1
        else:
            break
        if cand.item_id not in seen:
            seen.add(cand.item_id)
            out.append(cand)
        take_primary = not take_primary
    return out


def item_xp_pipeline(
    anchor: ItemRecord,
    deps: PipelineDeps,
    config: PipelineConfig | None = None,
) -> list[ScoredCandidate]:
    """Full anchor -> scored candidate flow.

    Themes -> theme recs -> generation filter -> GM-only k-NN per rec ->
    similar-item expansion -> CE + PT-level judge scoring -> combined score ->
    Poor band dropped -> interleaved with co-purchase (mba) candidates.
    A rec text that fails downstream is skipped with a warning, not fatal.
    """
    config = config or PipelineConfig()
    themes = llm_mod.generate_themes(anchor, deps.chat)
    recs = llm_mod.generate_theme_recs(anchor, themes, deps.chat)
    for rec in recs:
        llm_mod.evaluate_generation(rec, anchor, deps.chat)
    kept = llm_mod.filter_generated(recs, config.gen_threshold)
    return score_recs_for_anchor(anchor, kept, deps, config)


def score_recs_for_anchor(
    anchor: ItemRecord,
    kept: list[llm_mod.LlmRecommendation],
    deps: PipelineDeps,
    config: PipelineConfig | None = None,
) -> list[ScoredCandidate]:
    """Retrieval + scoring half of the pipeline, over already-filtered recs."""
    config = config or PipelineConfig()
    cache = deps.judge_cache or llm_mod.JudgeCache()

    by_item: dict[str, ScoredCandidate] = {}
    for rec in kept:
        try:
            query = deps.embedder.embed(rec.rec_text)
            hits = knn(deps.store, query, config.k_retrieve,
                       segment_filter="GM", catalog=deps.catalog)
            hits = [(i, s) for i, s in hits if s >= config.sim_floor]
            retrieved_ids = [i for i, _ in hits]
            extra = []
            if deps.similar is not None:
                extra = [i for i in expand_similar(retrieved_ids, deps.similar, config.per_item_similar)
                         if deps.catalog[i].segment == "GM"]
            for item_id, sim, source in (
                [(i, s, "llm") for i, s in hits] + [(i, 0.0, "similar") for i in extra]
            ):
                prev = by_item.get(item_id)
                if prev is not None and prev.retrieval_sim >= sim:
                    continue
                item = deps.catalog[item_id]
                ce = deps.cross.score(rec.rec_text, item.text)
                judged = llm_mod.judge_retrieved(
                    anchor.product_type, rec.rec_text, item.product_type,
                    deps.chat, cache,
                )
                cand = ScoredCandidate(
                    anchor_item_id=anchor.item_id,
                    item_id=item_id,
                    source=source,
                    llm_rec=rec.rec_text,
                    retrieval_sim=sim,
                    ce_score=ce,
                    llm_score=judged.score,
                ).finalize()
                by_item[item_id] = cand
        except llm_mod.LlmMalformedOutput as exc:
            llm_mod.log.warning("skipping rec %r: %s", rec.rec_text, exc)

    llm_ranked = sorted(
        (c for c in by_item.values() if c.band != QualityBand.Poor),
        key=lambda c: (-(c.combined or 0.0), c.item_id),
    )

    mba = []
    for c in deps.mba_candidates.get(anchor.product_type, []):
        if c.item_id in deps.catalog and deps.catalog[c.item_id].segment == "GM":
            mba.append(ScoredCandidate(
                anchor_item_id=anchor.item_id,
                item_id=c.item_id,
                source="mba",
                llm_rec="",
                retrieval_sim=c.retrieval_sim,
            ))
    mba.sort(key=lambda c: (-c.retrieval_sim, c.item_id))

    return _interleave(llm_ranked, mba)


def export_candidates(candidates: list[ScoredCandidate], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cand in candidates:
            fh.write(cand.to_json() + "\n")


def load_candidates(path: str) -> list[ScoredCandidate]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ScoredCandidate.from_json(line))
    return out
