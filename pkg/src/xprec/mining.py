"""Multi-session basket construction and OG->GM product-type association mining.

Baskets are tumbling windows (default 21 days) anchored at each customer's
first purchase. Association strength is measured with support, confidence and
lift over basket-level PT occurrences.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from .catalog import Catalog, popular_items_in_pt
from .errors import EmptyBaskets
from .scoring import ScoredCandidate

DAY_SECONDS = 86400


@dataclass(frozen=True)
class Transaction:
    customer_id: str
    item_id: str
    ts: float  # seconds since epoch

    def __post_init__(self):
        if self.ts < 0:
            raise ValueError("transaction timestamp must be >= 0")


@dataclass(frozen=True)
class Basket:
    customer_id: str
    window_start: float
    item_ids: frozenset[str]


@dataclass(frozen=True)
class AssociationRule:
    anchor_pt: str
    rec_pt: str
    support: float
    confidence: float
    lift: float


def load_transactions(path: str) -> list[Transaction]:
    txns = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            txns.append(Transaction(str(raw["customer_id"]), str(raw["item_id"]), float(raw["ts"])))
    return txns


def build_baskets(transactions: list[Transaction], window_days: int = 21) -> list[Basket]:
    """Partition each customer's purchases into tumbling windows.

    Windows are aligned to the customer's first purchase; baskets with fewer
    than 2 distinct items are dropped.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    per_customer: dict[str, list[Transaction]] = defaultdict(list)
    for t in transactions:
        per_customer[t.customer_id].append(t)

    window = window_days * DAY_SECONDS
    baskets: list[Basket] = []
    for customer_id in sorted(per_customer):
        txns = sorted(per_customer[customer_id], key=lambda t: (t.ts, t.item_id))
        t0 = txns[0].ts
        by_window: dict[int, set[str]] = defaultdict(set)
        for t in txns:
            by_window[int((t.ts - t0) // window)].add(t.item_id)
        for w_idx in sorted(by_window):
            items = by_window[w_idx]
            if len(items) >= 2:
                baskets.append(Basket(customer_id, t0 + w_idx * window, frozenset(items)))
    return baskets


def _pt_baskets(baskets: list[Basket], catalog: Catalog) -> list[frozenset[str]]:
    out = []
    for b in baskets:
        pts = {catalog.pt_of(i) for i in b.item_ids if i in catalog}
        out.append(frozenset(pts))
    return out


def mine_pt_associations(
    baskets: list[Basket],
    catalog: Catalog,
    min_support: float = 0.0005,
    min_confidence: float = 0.01,
) -> list[AssociationRule]:
    """Mine OG-anchor -> GM-rec PT rules over basket-level PT occurrences.

    P(.) is the fraction of baskets containing the PT (or both PTs); output is
    sorted by descending lift with (anchor_pt, rec_pt) ascending on ties.
    """
    if not baskets:
        raise EmptyBaskets("no baskets to mine")
    if not (0 <= min_support <= 1 and 0 <= min_confidence <= 1):
        raise ValueError("thresholds must be in [0, 1]")

    og_pts = set(catalog.product_types("OG"))
    gm_pts = set(catalog.product_types("GM"))

    pt_sets = _pt_baskets(baskets, catalog)
    n = len(pt_sets)
    single = defaultdict(int)
    pair = defaultdict(int)
    for pts in pt_sets:
        for pt in pts:
            single[pt] += 1
        anchors = sorted(p for p in pts if p in og_pts)
        recs = sorted(p for p in pts if p in gm_pts)
        for a in anchors:
            for r in recs:
                if a != r:
                    pair[(a, r)] += 1

    rules = []
    for (a, r), joint in pair.items():
        support = joint / n
        p_a = single[a] / n
        p_b = single[r] / n
        confidence = support / p_a
        lift = support / (p_a * p_b)
        if support >= min_support and confidence >= min_confidence:
            rules.append(AssociationRule(a, r, support, confidence, lift))
    rules.sort(key=lambda r: (-r.lift, r.anchor_pt, r.rec_pt))
    return rules


def pt_semantic_matches(
    og_pts: list[str],
    gm_pts: list[str],
    embedder,
    sim_threshold: float,
) -> list[tuple[str, str, float]]:
    """All OG x GM PT-name pairs with embedding cosine >= threshold, descending."""
    if not -1.0 <= sim_threshold <= 1.0:
        raise ValueError("sim_threshold must be in [-1, 1]")
    out = []
    for a in og_pts:
        va = embedder.embed(a)
        for b in gm_pts:
            vb = embedder.embed(b)
            sim = float(va @ vb)
            if sim >= sim_threshold:
                out.append((a, b, sim))
    out.sort(key=lambda t: (-t[2], t[0], t[1]))
    return out


def copurchase_candidates(
    rules: list[AssociationRule],
    catalog: Catalog,
    per_pt_k: int,
) -> dict[str, list[ScoredCandidate]]:
    """Per anchor PT, popular items of each associated GM PT, tagged "mba".

    A GM item reachable through several rules is kept once with the max lift.
    """
    if per_pt_k < 1:
        raise ValueError("per_pt_k must be >= 1")
    by_anchor: dict[str, dict[str, ScoredCandidate]] = defaultdict(dict)
    for rule in rules:
        if rule.rec_pt not in catalog.pt_index:
            continue
        for item_id in popular_items_in_pt(catalog, rule.rec_pt, per_pt_k):
            prev = by_anchor[rule.anchor_pt].get(item_id)
            if prev is None or rule.lift > prev.retrieval_sim:
                by_anchor[rule.anchor_pt][item_id] = ScoredCandidate(
                    anchor_item_id=rule.anchor_pt,
                    item_id=item_id,
                    source="mba",
                    llm_rec="",
                    retrieval_sim=rule.lift,
                )
    return {
        anchor: sorted(cands.values(), key=lambda c: (-c.retrieval_sim, c.item_id))
        for anchor, cands in sorted(by_anchor.items())
    }


def export_rules(rules: list[AssociationRule], path: str) -> None:
    """Write rules as a tab-separated table with a header row."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("anchor_pt\trec_pt\tsupport\tconfidence\tlift\n")
        for r in rules:
            fh.write(f"{r.anchor_pt}\t{r.rec_pt}\t{r.support:.10f}\t{r.confidence:.10f}\t{r.lift:.10f}\n")


def load_rules(path: str) -> list[AssociationRule]:
    rules = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        assert header.startswith("anchor_pt")
        for line in fh:
            a, r, s, c, l = line.rstrip("\n").split("\t")
            rules.append(AssociationRule(a, r, float(s), float(c), float(l)))
    return rules
