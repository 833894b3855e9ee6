"""Real-time cart recommendation service.

Maintains per-cart state and a candidate pool fed by precomputed per-anchor
candidates (top-30 per anchor, 300 cap with stratified sampling across rec
product types), ranks the pool with the neural ranker or the heuristic
baseline, and serves a PT-diversified carousel over HTTP JSON.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog, load_catalog
from .errors import TargetNonPositive, UnknownCart, UnknownItem
from .ranker import CartState, PersonaAffinity, RankerModel, heuristic_baseline_rank, load_ranker
from .retrieval import HashNgramEmbedder, load_candidates
from .scoring import ScoredCandidate

POOL_CAP = 300
PER_ANCHOR_CAP = 30


@dataclass
class CandidatePool:
    cart_id: str
    entries: list[ScoredCandidate] = field(default_factory=list)
    per_anchor_counts: dict[str, int] = field(default_factory=dict)

    def check_invariants(self) -> None:
        assert len(self.entries) <= POOL_CAP
        ids = [c.item_id for c in self.entries]
        assert len(ids) == len(set(ids))
        counts: dict[str, int] = {}
        for c in self.entries:
            counts[c.anchor_item_id] = counts.get(c.anchor_item_id, 0) + 1
        for anchor, n in counts.items():
            assert n <= PER_ANCHOR_CAP, anchor


@dataclass
class Carousel:
    ranked: list[tuple[str, float, str, str | None]]  # (item_id, score, source, band)
    generated_at: float
    model_tag: str

    def to_dict(self, pool: CandidatePool | None = None, explain: bool = False) -> dict:
        by_id = {c.item_id: c for c in pool.entries} if pool else {}
        items = []
        for item_id, score, source, band_name in self.ranked:
            row = {"item_id": item_id, "score": score, "source": source, "band": band_name}
            if explain and item_id in by_id:
                cand = by_id[item_id]
                row["explanation"] = {
                    "anchor_item_id": cand.anchor_item_id,
                    "source": cand.source,
                    "llm_rec": cand.llm_rec,
                    "ce_score": cand.ce_score,
                    "llm_score": cand.llm_score,
                    "combined": cand.combined,
                    "band": cand.band.name if cand.band is not None else None,
                }
            items.append(row)
        return {"items": items, "generated_at": self.generated_at,
                "model_tag": self.model_tag}


def stratified_sample(entries: list[ScoredCandidate], target: int, seed: int,
                      catalog: Catalog) -> list[ScoredCandidate]:
    """Down-sample across rec product types.

    Every nonempty stratum keeps at least one slot while the target allows;
    the remainder is allocated proportionally to stratum size (largest
    remainder, larger stratum first). Within a stratum the highest retrieval
    scores survive. Fully deterministic.
    """
    if target <= 0:
        raise TargetNonPositive(f"target must be positive, got {target}")
    if len(entries) <= target:
        return list(entries)

    strata: dict[str, list[ScoredCandidate]] = {}
    for cand in entries:
        pt = catalog.pt_of(cand.item_id) if cand.item_id in catalog else ""
        strata.setdefault(pt, []).append(cand)
    names = sorted(strata, key=lambda p: (-len(strata[p]), p))

    alloc = {p: 0 for p in names}
    baseline = names[:target]  # one guaranteed slot per stratum, largest first
    for p in baseline:
        alloc[p] = 1
    remaining = target - len(baseline)
    if remaining > 0:
        total = sum(len(strata[p]) for p in names)
        quotas = {p: remaining * len(strata[p]) / total for p in names}
        for p in names:
            alloc[p] += int(quotas[p])
        leftover = remaining - sum(int(quotas[p]) for p in names)
        by_frac = sorted(names, key=lambda p: (-(quotas[p] - int(quotas[p])),
                                               -len(strata[p]), p))
        for p in by_frac[:leftover]:
            alloc[p] += 1

    # Caps and redistribution when a stratum is smaller than its allocation.
    spare = 0
    for p in names:
        if alloc[p] > len(strata[p]):
            spare += alloc[p] - len(strata[p])
            alloc[p] = len(strata[p])
    while spare > 0:
        progressed = False
        for p in names:
            if spare > 0 and alloc[p] < len(strata[p]):
                alloc[p] += 1
                spare -= 1
                progressed = True
        if not progressed:
            break

    kept = []
    for p in names:
        ranked = sorted(strata[p], key=lambda c: (-c.retrieval_sim, c.item_id))
        kept.extend(ranked[:alloc[p]])
    order = {id(c): i for i, c in enumerate(entries)}
    kept.sort(key=lambda c: order[id(c)])
    return kept


@dataclass
class ServiceConfig:
    port: int = 8080
    catalog_path: str = ""
    candidates_path: str = ""
    checkpoint_path: str = ""
    store_path: str = ""
    personas_path: str = ""
    affinity_path: str = ""
    max_per_pt: int = 2
    embed_dim: int = 32
    embed_seed: int = 0
    exclude_cart_pts: bool = False
    event_log_path: str = ""
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    @staticmethod
    def load(path: str) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            return ServiceConfig(**json.load(fh))


class CartSession:
    """State for one cart: entries, contributing anchors, derived pool."""

    def __init__(self, cart_id: str):
        self.cart_id = cart_id
        self.state = CartState(cart_id, [])
        self.anchor_order: list[str] = []  # OG anchors in first-add order
        self.pool = CandidatePool(cart_id)
        self.lock = threading.Lock()


class RecommendService:
    """All shared state behind the HTTP handlers.

    The catalog, per-anchor candidates, and model checkpoint are immutable
    after construction; per-cart mutation is serialized by a per-cart lock.
    """

    def __init__(
        self,
        catalog: Catalog,
        per_anchor: dict[str, list[ScoredCandidate]],
        model: RankerModel | None = None,
        affinity: PersonaAffinity | None = None,
        personas: dict[str, np.ndarray] | None = None,
        max_per_pt: int = 2,
        exclude_cart_pts: bool = False,
        event_log_path: str = "",
    ):
        self.catalog = catalog
        self.per_anchor = {a: cands[:PER_ANCHOR_CAP] for a, cands in per_anchor.items()}
        self.model = model
        self.affinity = affinity or PersonaAffinity({})
        self.personas = personas or {}
        self.max_per_pt = max_per_pt
        self.exclude_cart_pts = exclude_cart_pts
        self.event_log_path = event_log_path
        self._carts: dict[str, CartSession] = {}
        self._registry_lock = threading.Lock()
        if event_log_path and os.path.exists(event_log_path):
            self._replay_event_log()

    # -- cart/event handling -------------------------------------------

    def _session(self, cart_id: str, create: bool = True) -> CartSession:
        with self._registry_lock:
            sess = self._carts.get(cart_id)
            if sess is None:
                if not create:
                    raise UnknownCart(cart_id)
                sess = CartSession(cart_id)
                self._carts[cart_id] = sess
            return sess

    def on_cart_event(self, cart_id: str, event: dict) -> tuple[CartState, CandidatePool]:
        etype = event.get("type")
        item_id = event.get("item_id")
        ts = float(event.get("ts", time.time()))
        if etype not in ("add", "remove"):
            raise ValueError(f"unknown event type {etype!r}")
        if item_id not in self.catalog:
            raise UnknownItem(item_id)

        sess = self._session(cart_id)
        with sess.lock:
            if etype == "add":
                self._apply_add(sess, item_id, ts, event)
            else:
                self._apply_remove(sess, item_id)
            self._rebuild_pool(sess)
            self._log_event(cart_id, etype, item_id, ts)
            return sess.state, sess.pool

    def _apply_add(self, sess: CartSession, item_id: str, ts: float, event: dict) -> None:
        entries = [e for e in sess.state.entries if e[0] != item_id]
        entries.append((item_id, ts))
        customer = event.get("customer_id")
        persona = sess.state.persona
        if customer and customer in self.personas:
            persona = self.personas[customer]
        sess.state = CartState(sess.cart_id, entries, persona=persona,
                               platform=int(event.get("platform", sess.state.platform)))
        if self.catalog[item_id].segment == "OG" and item_id in self.per_anchor \
                and item_id not in sess.anchor_order:
            sess.anchor_order.append(item_id)

    def _apply_remove(self, sess: CartSession, item_id: str) -> None:
        entries = [e for e in sess.state.entries if e[0] != item_id]
        sess.state = CartState(sess.cart_id, entries, persona=sess.state.persona,
                               platform=sess.state.platform)
        if item_id in sess.anchor_order:
            sess.anchor_order.remove(item_id)

    def _rebuild_pool(self, sess: CartSession) -> None:
        """Derive the pool from the current anchors.

        Rebuilding from scratch (anchors in first-add order, duplicates kept
        by the earliest anchor) makes remove-after-add an exact inverse.
        """
        entries: list[ScoredCandidate] = []
        seen: set[str] = set()
        for anchor in sess.anchor_order:
            for cand in self.per_anchor.get(anchor, []):
                if cand.item_id not in seen:
                    seen.add(cand.item_id)
                    entries.append(cand)
        if len(entries) > POOL_CAP:
            entries = stratified_sample(entries, POOL_CAP, 0, self.catalog)
        sess.pool = CandidatePool(sess.cart_id, entries)

    def _log_event(self, cart_id: str, etype: str, item_id: str, ts: float) -> None:
        if not self.event_log_path:
            return
        with open(self.event_log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"cart_id": cart_id, "type": etype,
                                 "item_id": item_id, "ts": ts}, sort_keys=True) + "\n")

    def _replay_event_log(self) -> None:
        path = self.event_log_path
        self.event_log_path = ""  # do not re-append while replaying
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        ev = json.loads(line)
                        self.on_cart_event(ev["cart_id"], ev)
        finally:
            self.event_log_path = path

    # -- recommendation ------------------------------------------------

    def recommend(self, cart_id: str, k: int, model_tag: str = "ranker") -> Carousel:
        if model_tag not in ("ranker", "heuristic"):
            raise ValueError(f"unknown model tag {model_tag!r}")
        if model_tag == "ranker" and self.model is None:
            raise ValueError("no ranker checkpoint loaded")
        sess = self._session(cart_id, create=False)
        with sess.lock:
            state, pool = sess.state, sess.pool

        in_cart = set(state.item_ids())
        cart_pts = {self.catalog.pt_of(i) for i in in_cart if i in self.catalog}
        candidates = [c for c in pool.entries if c.item_id not in in_cart]
        if self.exclude_cart_pts:
            candidates = [c for c in candidates
                          if self.catalog.pt_of(c.item_id) not in cart_pts]
        if not candidates or not state.entries:
            return Carousel([], time.time(), model_tag)

        if model_tag == "ranker":
            ids = [c.item_id for c in candidates]
            scores = self.model.score_batch(state, ids).data
            ranked = sorted(zip(candidates, scores), key=lambda t: (-t[1], t[0].item_id))
        else:
            order = heuristic_baseline_rank(state, candidates, state.persona,
                                            self.catalog, self.affinity)
            pos = {item_id: i for i, item_id in enumerate(order)}
            ranked = [(c, float(len(order) - pos[c.item_id]))
                      for c in sorted(candidates, key=lambda c: pos[c.item_id])]

        picks: list[tuple[str, float, str, str | None]] = []
        pt_counts: dict[str, int] = {}
        for cand, score in ranked:
            pt = self.catalog.pt_of(cand.item_id)
            if pt_counts.get(pt, 0) >= self.max_per_pt:
                continue
            pt_counts[pt] = pt_counts.get(pt, 0) + 1
            picks.append((cand.item_id, float(score), cand.source,
                          cand.band.name if cand.band is not None else None))
            if len(picks) >= k:
                break
        return Carousel(picks, time.time(), model_tag)

    def cart_snapshot(self, cart_id: str) -> dict:
        sess = self._session(cart_id, create=False)
        with sess.lock:
            return {
                "cart_id": cart_id,
                "entries": [{"item_id": i, "ts": ts} for i, ts in sess.state.entries],
                "platform": sess.state.platform,
                "anchors": list(sess.anchor_order),
                "pool": [c.item_id for c in sess.pool.entries],
                "pool_size": len(sess.pool.entries),
            }


# ---------------------------------------------------------------------------
# HTTP app
# ---------------------------------------------------------------------------

def group_by_anchor(candidates: list[ScoredCandidate]) -> dict[str, list[ScoredCandidate]]:
    out: dict[str, list[ScoredCandidate]] = {}
    for cand in candidates:
        out.setdefault(cand.anchor_item_id, []).append(cand)
    return out


def build_service(config: ServiceConfig) -> RecommendService:
    catalog = load_catalog(config.catalog_path)
    per_anchor = group_by_anchor(load_candidates(config.candidates_path)) \
        if config.candidates_path else {}
    model = None
    if config.checkpoint_path:
        embedder = HashNgramEmbedder(dim=config.embed_dim, seed=config.embed_seed)
        model = load_ranker(config.checkpoint_path, catalog, embedder)
    affinity = None
    if config.affinity_path:
        with open(config.affinity_path, encoding="utf-8") as fh:
            affinity = PersonaAffinity(json.load(fh))
    personas = None
    if config.personas_path:
        with open(config.personas_path, encoding="utf-8") as fh:
            personas = {c: np.asarray(v) for c, v in json.load(fh).items()}
    return RecommendService(
        catalog, per_anchor, model=model, affinity=affinity, personas=personas,
        max_per_pt=config.max_per_pt, exclude_cart_pts=config.exclude_cart_pts,
        event_log_path=config.event_log_path,
    )


def create_app(service: RecommendService, cors_origins: list[str] | None = None):
    from fastapi import FastAPI, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="cart-xp")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"code": code, "message": message})

    @app.exception_handler(UnknownItem)
    async def _unknown_item(request: Request, exc: UnknownItem):
        return error(404, "unknown_item", str(exc))

    @app.exception_handler(UnknownCart)
    async def _unknown_cart(request: Request, exc: UnknownCart):
        return error(404, "unknown_cart", str(exc))

    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: ValueError):
        return error(400, "bad_request", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "ranker": service.model is not None}

    @app.get("/v1/items/{item_id}")
    async def get_item(item_id: str):
        item = service.catalog.get(item_id)
        if item is None:
            raise UnknownItem(item_id)
        return {"item_id": item.item_id, "title": item.title,
                "product_type": item.product_type, "category": item.category,
                "segment": item.segment, "price": item.price}

    @app.get("/v1/items")
    async def search_items(q: str = "", segment: str = "", limit: int = 25):
        q_lower = q.lower()
        hits = []
        for item_id in sorted(service.catalog.items):
            item = service.catalog.items[item_id]
            if segment and item.segment != segment:
                continue
            if q_lower and q_lower not in item.title.lower() \
                    and q_lower not in item.product_type.lower():
                continue
            hits.append({"item_id": item.item_id, "title": item.title,
                         "product_type": item.product_type, "segment": item.segment,
                         "price": item.price})
            if len(hits) >= limit:
                break
        return {"items": hits}

    @app.post("/v1/carts/{cart_id}/events")
    async def post_event(cart_id: str, event: dict):
        state, pool = service.on_cart_event(cart_id, event)
        return {"cart_id": cart_id, "cart_size": len(state.entries),
                "pool_size": len(pool.entries)}

    @app.get("/v1/carts/{cart_id}")
    async def get_cart(cart_id: str):
        return service.cart_snapshot(cart_id)

    @app.get("/v1/carts/{cart_id}/recommendations")
    async def get_recommendations(cart_id: str, k: int = 12, model: str = "ranker",
                                  explain: bool = False, max_per_pt: int = 0):
        if max_per_pt > 0:
            # Per-request diversity override.
            saved = service.max_per_pt
            service.max_per_pt = max_per_pt
            try:
                carousel = service.recommend(cart_id, k, model)
            finally:
                service.max_per_pt = saved
        else:
            carousel = service.recommend(cart_id, k, model)
        sess = service._carts.get(cart_id)
        return carousel.to_dict(sess.pool if sess else None, explain=explain)

    return app


def run_server(config: ServiceConfig) -> None:
    import uvicorn

    service = build_service(config)
    app = create_app(service, config.cors_origins)
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="warning")
