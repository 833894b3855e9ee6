import numpy as np
import pytest
from fastapi.testclient import TestClient

from xprec.catalog import Catalog, ItemRecord, add_item
from xprec.errors import TargetNonPositive
from xprec.ranker import PersonaAffinity
from xprec.scoring import QualityBand, ScoredCandidate
from xprec.serving import (
    PER_ANCHOR_CAP,
    POOL_CAP,
    RecommendService,
    create_app,
    group_by_anchor,
    stratified_sample,
)

from conftest import make_catalog


def wide_catalog(n_og=15, n_gm_pts=25, per_pt=40):
    """Catalog with many GM PTs so pools can exceed the 300 cap."""
    cat = Catalog()
    for i in range(n_og):
        add_item(cat, ItemRecord(f"og{i:03d}", f"grocery item {i}", f"OGPT{i % 5}",
                                 "pantry", "OG", 2.0 + i))
    for p in range(n_gm_pts):
        for j in range(per_pt):
            add_item(cat, ItemRecord(f"gm{p:02d}_{j:02d}", f"gm item {p} {j}",
                                     f"GMPT{p:02d}", "kitchen", "GM", 9.0 + j))
    return cat


def make_cands(catalog, anchor, n, offset=0):
    gm = [i for i in sorted(catalog.items) if catalog[i].segment == "GM"]
    out = []
    for j in range(n):
        item = gm[(offset + j) % len(gm)]
        out.append(ScoredCandidate(anchor, item, "llm", "rec", 1.0 - j * 1e-3,
                                   0.9, 0.8).finalize())
    return out


# --- stratified sampling --------------------------------------------------

def strat_entries(catalog, counts):
    """counts: {pt_index: n} using the wide catalog's GMPTxx naming."""
    out = []
    for p, n in counts.items():
        for j in range(n):
            out.append(ScoredCandidate("a", f"gm{p:02d}_{j:02d}", "llm", "",
                                       1.0 - j * 0.01))
    return out


def test_stratified_equal_strata():
    cat = wide_catalog()
    entries = strat_entries(cat, {0: 10, 1: 10, 2: 10})
    kept = stratified_sample(entries, 6, 0, cat)
    by_pt = {}
    for c in kept:
        by_pt[cat.pt_of(c.item_id)] = by_pt.get(cat.pt_of(c.item_id), 0) + 1
    assert by_pt == {"GMPT00": 2, "GMPT01": 2, "GMPT02": 2}


def test_stratified_five_one_target_three():
    cat = wide_catalog()
    entries = strat_entries(cat, {0: 5, 1: 1})
    kept = stratified_sample(entries, 3, 0, cat)
    by_pt = {}
    for c in kept:
        by_pt[cat.pt_of(c.item_id)] = by_pt.get(cat.pt_of(c.item_id), 0) + 1
    assert by_pt == {"GMPT00": 2, "GMPT01": 1}


def test_stratified_single_stratum():
    cat = wide_catalog(per_pt=40)
    entries = strat_entries(cat, {0: 40})
    kept = stratified_sample(entries, 25, 0, cat)
    assert len(kept) == 25
    # highest retrieval scores survive
    assert {c.item_id for c in kept} == {f"gm00_{j:02d}" for j in range(25)}


def test_stratified_no_op_when_under_target():
    cat = wide_catalog()
    entries = strat_entries(cat, {0: 3})
    assert stratified_sample(entries, 10, 0, cat) == entries


def test_stratified_keeps_input_order():
    cat = wide_catalog()
    entries = strat_entries(cat, {2: 4, 0: 4, 1: 4})
    kept = stratified_sample(entries, 6, 0, cat)
    order = {id(c): i for i, c in enumerate(entries)}
    assert [order[id(c)] for c in kept] == sorted(order[id(c)] for c in kept)


def test_stratified_more_strata_than_target():
    cat = wide_catalog()
    entries = strat_entries(cat, {p: 3 for p in range(10)})
    kept = stratified_sample(entries, 4, 0, cat)
    assert len(kept) == 4
    pts = {cat.pt_of(c.item_id) for c in kept}
    assert len(pts) == 4  # one per surviving stratum


def test_stratified_target_validation():
    cat = wide_catalog()
    with pytest.raises(TargetNonPositive):
        stratified_sample([], 0, 0, cat)


def test_stratified_deterministic():
    cat = wide_catalog()
    entries = strat_entries(cat, {0: 20, 1: 7, 2: 3})
    a = stratified_sample(entries, 12, 0, cat)
    b = stratified_sample(entries, 12, 0, cat)
    assert [c.item_id for c in a] == [c.item_id for c in b]


# --- pool maintenance -----------------------------------------------------

def service_with(catalog, per_anchor, **kw):
    return RecommendService(catalog, per_anchor, **kw)


def test_add_builds_capped_pool():
    cat = wide_catalog()
    per_anchor = {"og000": make_cands(cat, "og000", 45)}
    svc = service_with(cat, per_anchor)
    _, pool = svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    assert len(pool.entries) == PER_ANCHOR_CAP
    pool.check_invariants()


def test_pool_cap_across_many_anchors():
    cat = wide_catalog()
    per_anchor = {f"og{i:03d}": make_cands(cat, f"og{i:03d}", 30, offset=i * 30)
                  for i in range(12)}
    svc = service_with(cat, per_anchor)
    for i in range(12):
        _, pool = svc.on_cart_event("c1", {"type": "add", "item_id": f"og{i:03d}",
                                           "ts": float(i)})
        pool.check_invariants()
    assert len(pool.entries) == POOL_CAP


def test_remove_after_add_is_exact_inverse():
    cat = wide_catalog()
    per_anchor = {"og000": make_cands(cat, "og000", 20),
                  "og001": make_cands(cat, "og001", 20, offset=10)}
    svc = service_with(cat, per_anchor)
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    _, before = svc.on_cart_event("c1", {"type": "add", "item_id": "og001", "ts": 2.0})
    before_ids = [c.item_id for c in before.entries]
    svc.on_cart_event("c1", {"type": "add", "item_id": "og002", "ts": 3.0})
    _, after = svc.on_cart_event("c1", {"type": "remove", "item_id": "og002"})
    assert [c.item_id for c in after.entries] == before_ids


def test_duplicate_candidates_kept_by_earliest_anchor():
    cat = wide_catalog()
    shared = make_cands(cat, "og000", 5)
    dup = [ScoredCandidate("og001", c.item_id, "mba", "", 0.5) for c in shared]
    svc = service_with(cat, {"og000": shared, "og001": dup})
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    _, pool = svc.on_cart_event("c1", {"type": "add", "item_id": "og001", "ts": 2.0})
    assert len(pool.entries) == 5
    assert all(c.anchor_item_id == "og000" for c in pool.entries)


def test_gm_add_contributes_no_anchor():
    cat = wide_catalog()
    svc = service_with(cat, {"og000": make_cands(cat, "og000", 5)})
    _, pool = svc.on_cart_event("c1", {"type": "add", "item_id": "gm00_00", "ts": 1.0})
    assert pool.entries == []


def test_unknown_item_and_bad_event():
    cat = wide_catalog()
    svc = service_with(cat, {})
    from xprec.errors import UnknownItem
    with pytest.raises(UnknownItem):
        svc.on_cart_event("c1", {"type": "add", "item_id": "ghost"})
    with pytest.raises(ValueError):
        svc.on_cart_event("c1", {"type": "clear", "item_id": "og000"})


def test_pool_fuzzing_invariants_random_sequences():
    cat = wide_catalog()
    per_anchor = {f"og{i:03d}": make_cands(cat, f"og{i:03d}", 40, offset=i * 17)
                  for i in range(15)}
    rng = np.random.default_rng(0)
    og = sorted(per_anchor)
    for trial in range(60):
        svc = service_with(cat, per_anchor)
        cart = f"cart{trial}"
        in_cart: set[str] = set()
        for step in range(int(rng.integers(5, 30))):
            if in_cart and rng.random() < 0.35:
                item = sorted(in_cart)[int(rng.integers(len(in_cart)))]
                _, pool = svc.on_cart_event(cart, {"type": "remove", "item_id": item})
                in_cart.discard(item)
            else:
                item = og[int(rng.integers(len(og)))]
                _, pool = svc.on_cart_event(cart, {"type": "add", "item_id": item,
                                                   "ts": float(step)})
                in_cart.add(item)
            pool.check_invariants()


def test_event_log_replay_restores_state(tmp_path):
    cat = wide_catalog()
    per_anchor = {"og000": make_cands(cat, "og000", 10)}
    log = tmp_path / "events.jsonl"
    svc = service_with(cat, per_anchor, event_log_path=str(log))
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    svc.on_cart_event("c1", {"type": "add", "item_id": "og001", "ts": 2.0})
    snap = svc.cart_snapshot("c1")

    restored = service_with(cat, per_anchor, event_log_path=str(log))
    assert restored.cart_snapshot("c1") == snap


# --- recommendation -------------------------------------------------------

def heuristic_service(catalog=None, max_per_pt=2):
    cat = catalog or make_catalog(n_og=6, n_gm=12)
    per_anchor = {}
    gm = [i for i in sorted(cat.items) if cat[i].segment == "GM"]
    for a in [i for i in sorted(cat.items) if cat[i].segment == "OG"]:
        per_anchor[a] = [ScoredCandidate(a, g, "llm", "r", 0.9, 0.9, 0.9).finalize()
                         for g in gm]
    return cat, RecommendService(cat, per_anchor, affinity=PersonaAffinity({}),
                                 max_per_pt=max_per_pt)


def test_recommend_heuristic_respects_k_and_diversity():
    cat, svc = heuristic_service()
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    carousel = svc.recommend("c1", k=6, model_tag="heuristic")
    assert len(carousel.ranked) <= 6
    pt_counts = {}
    for item_id, score, source, band in carousel.ranked:
        pt = cat.pt_of(item_id)
        pt_counts[pt] = pt_counts.get(pt, 0) + 1
        assert band == "Excellent" and source == "llm"
    assert all(n <= 2 for n in pt_counts.values())


def test_recommend_excludes_in_cart_items():
    cat, svc = heuristic_service()
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    svc.on_cart_event("c1", {"type": "add", "item_id": "gm000", "ts": 2.0})
    carousel = svc.recommend("c1", k=20, model_tag="heuristic")
    assert "gm000" not in [r[0] for r in carousel.ranked]


def test_recommend_unknown_cart_and_bad_tag():
    _, svc = heuristic_service()
    from xprec.errors import UnknownCart
    with pytest.raises(UnknownCart):
        svc.recommend("nope", k=5, model_tag="heuristic")
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    with pytest.raises(ValueError):
        svc.recommend("c1", k=5, model_tag="oracle")
    with pytest.raises(ValueError):
        svc.recommend("c1", k=5, model_tag="ranker")  # no checkpoint loaded


def test_recommend_empty_cart_empty_carousel():
    _, svc = heuristic_service()
    svc.on_cart_event("c1", {"type": "add", "item_id": "og000", "ts": 1.0})
    svc.on_cart_event("c1", {"type": "remove", "item_id": "og000"})
    assert svc.recommend("c1", k=5, model_tag="heuristic").ranked == []


def test_group_by_anchor():
    cands = [ScoredCandidate("a1", "x", "llm"), ScoredCandidate("a2", "y", "mba"),
             ScoredCandidate("a1", "z", "llm")]
    grouped = group_by_anchor(cands)
    assert [c.item_id for c in grouped["a1"]] == ["x", "z"]
    assert [c.item_id for c in grouped["a2"]] == ["y"]


# --- HTTP API -------------------------------------------------------------

@pytest.fixture
def client():
    _, svc = heuristic_service()
    return TestClient(create_app(svc), raise_server_exceptions=False)


def test_http_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "ranker": False}


def test_http_item_lookup_and_404(client):
    ok = client.get("/v1/items/og000")
    assert ok.status_code == 200
    assert ok.json()["segment"] == "OG"
    missing = client.get("/v1/items/ghost")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"code", "message"} and body["code"] == "unknown_item"


def test_http_item_search(client):
    resp = client.get("/v1/items", params={"q": "dog", "segment": "GM"})
    items = resp.json()["items"]
    assert items and all(i["segment"] == "GM" for i in items)
    assert all("dog" in (i["title"] + i["product_type"]).lower() for i in items)
    limited = client.get("/v1/items", params={"q": "", "limit": 3}).json()["items"]
    assert len(limited) == 3


def test_http_event_flow_and_recommendations(client):
    resp = client.post("/v1/carts/c9/events",
                       json={"type": "add", "item_id": "og000", "ts": 1.0})
    assert resp.status_code == 200
    assert resp.json()["cart_size"] == 1 and resp.json()["pool_size"] > 0

    recs = client.get("/v1/carts/c9/recommendations",
                      params={"k": 4, "model": "heuristic"})
    body = recs.json()
    assert recs.status_code == 200
    assert 0 < len(body["items"]) <= 4
    assert body["model_tag"] == "heuristic"
    assert set(body["items"][0]) == {"item_id", "score", "source", "band"}

    explained = client.get("/v1/carts/c9/recommendations",
                           params={"k": 2, "model": "heuristic", "explain": "true"}).json()
    assert "explanation" in explained["items"][0]
    assert explained["items"][0]["explanation"]["combined"] is not None

    snap = client.get("/v1/carts/c9").json()
    assert snap["cart_id"] == "c9" and snap["anchors"] == ["og000"]


def test_http_max_per_pt_override(client):
    client.post("/v1/carts/c2/events", json={"type": "add", "item_id": "og000", "ts": 1.0})
    body = client.get("/v1/carts/c2/recommendations",
                      params={"k": 12, "model": "heuristic", "max_per_pt": 1}).json()
    cat = make_catalog(n_og=6, n_gm=12)
    pts = [cat.pt_of(i["item_id"]) for i in body["items"]]
    assert len(pts) == len(set(pts))


def test_http_errors(client):
    bad_event = client.post("/v1/carts/c3/events",
                            json={"type": "add", "item_id": "ghost"})
    assert bad_event.status_code == 404
    bad_type = client.post("/v1/carts/c3/events",
                           json={"type": "merge", "item_id": "og000"})
    assert bad_type.status_code == 400
    assert bad_type.json()["code"] == "bad_request"
    missing_cart = client.get("/v1/carts/never/recommendations",
                              params={"model": "heuristic"})
    assert missing_cart.status_code == 404
