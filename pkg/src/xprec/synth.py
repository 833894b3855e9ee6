"""Synthetic benchmark data with planted cross-category structure.

Generates a two-segment catalog, purchase transactions whose OG-PT/GM-PT
co-occurrence follows planted affinity pairs, and browsing sessions whose
click/purchase propensity follows the same pairs plus persona and item
quality signals. The truth file records the planted pairs so statistical
claims can be checked against known ground truth.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .catalog import Catalog, ItemRecord, add_item
from .errors import ConfigInvalid
from .ranker import SessionEvent

DAY = 86400

OG_PT_NAMES = [
    "Ground Coffee", "Breakfast Cereal", "Fresh Pasta", "Pancake Mix",
    "Dog Food", "Cat Litter", "Olive Oil", "Sandwich Bread", "Greek Yogurt",
    "Sparkling Water", "Trail Mix", "Hot Sauce", "Baby Formula",
    "Frozen Pizza", "Tea Bags", "Tortilla Chips", "Maple Syrup",
    "Protein Bars", "Rice Noodles", "Fresh Salsa", "Whole Milk",
    "Orange Juice", "Oat Granola", "Peanut Butter", "Dill Pickles",
    "Baking Flour", "Brown Sugar", "Canned Tuna", "Steel Cut Oats",
    "Energy Drinks", "Deli Turkey", "String Cheese", "Popcorn Kernels",
    "Vanilla Ice Cream", "Plain Bagels", "Tomato Ketchup", "Ground Beef",
    "Salad Greens", "Cold Brew Concentrate", "Coffee Creamer",
]

GM_PT_NAMES = [
    "Travel Mugs", "Cereal Bowls", "Pasta Makers", "Griddle Pans",
    "Dog Beds", "Litter Mats", "Oil Dispensers", "Bread Boxes",
    "Yogurt Makers", "Water Bottles", "Snack Containers", "Spice Racks",
    "Bottle Warmers", "Pizza Stones", "Electric Kettles", "Serving Bowls",
    "Syrup Pitchers", "Shaker Bottles", "Wok Pans", "Tortilla Presses",
    "Milk Frothers", "Citrus Juicers", "Storage Jars", "Butter Knives",
    "Canning Kits", "Mixing Bowls", "Measuring Cups", "Can Openers",
    "Slow Cookers", "Gym Towels", "Lunch Boxes", "Cheese Boards",
    "Popcorn Makers", "Ice Cream Scoops", "Bread Toasters",
    "Condiment Caddies", "Meat Thermometers", "Salad Spinners",
    "Soap Dispensers", "Pour Over Kits",
]

OG_CATEGORIES = ["pantry", "produce", "dairy", "beverages", "snacks", "household"]
GM_CATEGORIES = ["kitchen", "home", "storage", "pet", "fitness", "outdoor"]

BRANDS = ["Acme", "Harbor", "Northline", "Goldleaf", "Prairie", "Summit",
          "Bluebird", "Cascade", "Orchard", "Lantern", "Redwood", "Meridian"]

# Title variant word and its latent click-quality multiplier; the word is
# visible in the title so text features can recover the signal.
VARIANTS = [
    ("premium", 0.95), ("deluxe", 0.90), ("pro", 0.85), ("signature", 0.80),
    ("classic", 0.50), ("everyday", 0.45), ("compact", 0.40),
    ("basic", 0.25), ("value", 0.20), ("starter", 0.15),
]

# Fixed persona-to-category mapping shared with the heuristic baseline:
# eight persona dimensions per GM category.
PERSONA_CATEGORY_DIMS = {
    cat: list(range(8 * i, 8 * i + 8)) for i, cat in enumerate(GM_CATEGORIES)
}


@dataclass
class SynthConfig:
    seed: int = 1
    n_customers: int = 2000
    n_og_items: int = 400
    n_gm_items: int = 400
    n_pts_per_side: int = 20
    n_planted_pairs: int = 20
    planted_strength_min: float = 0.7
    planted_strength_max: float = 1.0
    n_sessions: int = 1500
    horizon_days: int = 7

    def __post_init__(self):
        if self.n_pts_per_side < 1 or self.n_pts_per_side > min(len(OG_PT_NAMES), len(GM_PT_NAMES)):
            raise ConfigInvalid(f"n_pts_per_side must be in [1, {min(len(OG_PT_NAMES), len(GM_PT_NAMES))}]")
        if self.n_planted_pairs > self.n_pts_per_side:
            raise ConfigInvalid("n_planted_pairs cannot exceed n_pts_per_side")
        if not (0 <= self.planted_strength_min <= self.planted_strength_max <= 1):
            raise ConfigInvalid("planted strengths must satisfy 0 <= min <= max <= 1")
        if min(self.n_customers, self.n_og_items, self.n_gm_items, self.n_sessions) < 1:
            raise ConfigInvalid("counts must be positive")
        if self.horizon_days < 1:
            raise ConfigInvalid("horizon_days must be >= 1")


@dataclass(frozen=True)
class PlantedPair:
    og_pt: str
    gm_pt: str
    strength: float


def _make_items(rng: np.random.Generator, n: int, pts: list[str],
                categories: list[str], segment: str, prefix: str,
                base_price: float) -> list[ItemRecord]:
    items = []
    base, extra = divmod(n, len(pts))
    idx = 0
    for pt_i, pt in enumerate(pts):
        for _ in range(base + (1 if pt_i < extra else 0)):
            brand = BRANDS[int(rng.integers(len(BRANDS)))]
            variant, _ = VARIANTS[int(rng.integers(len(VARIANTS)))]
            price = round(float(base_price * rng.lognormal(0.0, 0.45)), 2)
            items.append(ItemRecord(
                item_id=f"{prefix}{idx:05d}",
                title=f"{brand} {variant} {pt.lower()}",
                product_type=pt,
                category=categories[pt_i % len(categories)],
                segment=segment,
                price=price,
            ))
            idx += 1
    return items


def _variant_quality(title: str) -> float:
    for word, q in VARIANTS:
        if f" {word} " in f" {title} ":
            return q
    return 0.5


def gen_synth(config: SynthConfig, out_dir: str) -> dict[str, str]:
    """Write catalog/transactions/sessions/personas/truth files; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    og_pts = OG_PT_NAMES[:config.n_pts_per_side]
    gm_pts = GM_PT_NAMES[:config.n_pts_per_side]

    # Planted pairs use distinct PTs on both sides so their lifts are clean.
    og_pick = [og_pts[i] for i in rng.permutation(len(og_pts))[:config.n_planted_pairs]]
    gm_pick = [gm_pts[i] for i in rng.permutation(len(gm_pts))[:config.n_planted_pairs]]
    strengths = rng.uniform(config.planted_strength_min, config.planted_strength_max,
                            size=config.n_planted_pairs)
    planted = [PlantedPair(a, b, round(float(s), 4))
               for a, b, s in zip(og_pick, gm_pick, strengths)]
    pair_by_og = {p.og_pt: p for p in planted}
    pair_by_gm = {p.gm_pt: p for p in planted}

    catalog = Catalog()
    for item in _make_items(rng, config.n_og_items, og_pts, OG_CATEGORIES, "OG", "og", 4.0):
        add_item(catalog, item)
    for item in _make_items(rng, config.n_gm_items, gm_pts, GM_CATEGORIES, "GM", "gm", 18.0):
        add_item(catalog, item)
    gm_by_pt = {pt: sorted(i for i in catalog.pt_index.get(pt, []))
                for pt in gm_pts}
    og_by_pt = {pt: sorted(i for i in catalog.pt_index.get(pt, []))
                for pt in og_pts}
    gm_ids = sorted(i for i in catalog.items if catalog.items[i].segment == "GM")

    personas = {f"c{c:05d}": rng.random(64).round(4) for c in range(config.n_customers)}

    # -- transactions ---------------------------------------------------
    transactions = []
    for c in range(config.n_customers):
        customer = f"c{c:05d}"
        n_baskets = int(rng.integers(2, 6))
        offset = float(rng.uniform(0, 5 * DAY))
        for b in range(n_baskets):
            t0 = offset + b * 30 * DAY
            n_og = int(rng.integers(2, 5))
            basket_og_pts = [og_pts[i] for i in rng.choice(len(og_pts), size=n_og, replace=False)]
            pos = 0
            for pt in basket_og_pts:
                ids = og_by_pt[pt]
                item_id = ids[int(rng.integers(len(ids)))]
                transactions.append((customer, item_id, t0 + pos * 60))
                pos += 1
                pair = pair_by_og.get(pt)
                if pair is not None and rng.random() < 0.55 * pair.strength:
                    gm_ids_pt = gm_by_pt[pair.gm_pt]
                    gm_id = gm_ids_pt[int(rng.integers(len(gm_ids_pt)))]
                    transactions.append((customer, gm_id, t0 + pos * 60))
                    pos += 1
            if rng.random() < 0.30:
                gm_id = gm_ids[int(rng.integers(len(gm_ids)))]
                transactions.append((customer, gm_id, t0 + pos * 60))

    # -- sessions -------------------------------------------------------
    events: list[SessionEvent] = []
    for s in range(config.n_sessions):
        session_id = f"s{s:05d}"
        customer = f"c{int(rng.integers(config.n_customers)):05d}"
        persona = personas[customer]
        platform = int(rng.integers(4))
        t0 = 400 * DAY + s * 3600.0

        og_all = sorted(i for pt in og_pts for i in og_by_pt[pt])
        n_cart = min(int(rng.integers(2, 51)), len(og_all))
        cart_pt_set = set()
        pos = 0
        for i in rng.choice(len(og_all), size=n_cart, replace=False):
            item_id = og_all[i]
            events.append(SessionEvent(session_id, customer, t0 + pos * 30, "add",
                                       item_id, platform))
            cart_pt_set.add(catalog[item_id].product_type)
            pos += 1

        # Views: a couple of items from each planted GM PT matched by the
        # cart, padded with uniform background views.
        viewed: list[str] = []
        matched_pool: list[str] = []
        for pt in sorted(cart_pt_set):
            pair = pair_by_og.get(pt)
            if pair is None:
                continue
            ids = gm_by_pt[pair.gm_pt]
            for i in rng.choice(len(ids), size=min(2, len(ids)), replace=False):
                if ids[i] not in matched_pool:
                    matched_pool.append(ids[i])
        if len(matched_pool) > 10:
            keep = rng.choice(len(matched_pool), size=10, replace=False)
            matched_pool = [matched_pool[i] for i in sorted(keep)]
        viewed.extend(matched_pool)
        n_bg = int(rng.integers(8, 15))
        for i in rng.choice(len(gm_ids), size=n_bg, replace=False):
            if gm_ids[i] not in viewed:
                viewed.append(gm_ids[i])

        for v, gm_id in enumerate(viewed):
            view_ts = t0 + 600 + v * 45
            events.append(SessionEvent(session_id, customer, view_ts, "view",
                                       gm_id, platform))
            item = catalog[gm_id]
            pair = pair_by_gm.get(item.product_type)
            matched = pair is not None and pair.og_pt in cart_pt_set
            affinity = float(np.mean(persona[PERSONA_CATEGORY_DIMS[item.category]]))
            if matched:
                p_click = (0.02 + 0.28 * pair.strength * _variant_quality(item.title)) \
                    * (0.6 + 0.8 * affinity)
            else:
                p_click = 0.015 * (0.6 + 0.8 * affinity)
            if rng.random() >= min(p_click, 0.97):
                continue
            click_ts = view_ts + 10
            events.append(SessionEvent(session_id, customer, click_ts, "click",
                                       gm_id, platform))
            u = rng.random()
            if u < 0.85:
                atc_ts = click_ts + float(rng.uniform(0.1, 6.8)) * DAY
            else:
                atc_ts = click_ts + float(rng.uniform(8.0, 11.0)) * DAY
            events.append(SessionEvent(session_id, customer, atc_ts, "atc",
                                       gm_id, platform))

    # -- write files ----------------------------------------------------
    paths = {name: os.path.join(out_dir, fname) for name, fname in [
        ("catalog", "catalog.jsonl"), ("transactions", "transactions.jsonl"),
        ("sessions", "sessions.jsonl"), ("personas", "personas.json"),
        ("truth", "truth.json"), ("affinity", "persona_affinity.json"),
        ("config", "synth_config.json"),
    ]}

    with open(paths["catalog"], "w", encoding="utf-8") as fh:
        for item_id in sorted(catalog.items):
            item = catalog.items[item_id]
            fh.write(json.dumps({
                "item_id": item.item_id, "title": item.title,
                "product_type": item.product_type, "category": item.category,
                "segment": item.segment, "price": item.price,
            }, sort_keys=True) + "\n")

    with open(paths["transactions"], "w", encoding="utf-8") as fh:
        for customer, item_id, ts in transactions:
            fh.write(json.dumps({"customer_id": customer, "item_id": item_id,
                                 "ts": round(ts, 3)}, sort_keys=True) + "\n")

    with open(paths["sessions"], "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps({
                "session_id": ev.session_id, "customer_id": ev.customer_id,
                "ts": round(ev.ts, 3), "etype": ev.etype,
                "item_id": ev.item_id, "platform": ev.platform,
            }, sort_keys=True) + "\n")

    with open(paths["personas"], "w", encoding="utf-8") as fh:
        json.dump({c: [float(x) for x in v] for c, v in sorted(personas.items())},
                  fh, sort_keys=True)

    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump([asdict(p) for p in planted], fh, indent=2, sort_keys=True)

    with open(paths["affinity"], "w", encoding="utf-8") as fh:
        json.dump(PERSONA_CATEGORY_DIMS, fh, indent=2, sort_keys=True)

    with open(paths["config"], "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=2, sort_keys=True)

    return paths


# ---------------------------------------------------------------------------
# Loaders for the generated files
# ---------------------------------------------------------------------------

def load_sessions(path: str) -> list[SessionEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            events.append(SessionEvent(raw["session_id"], raw["customer_id"],
                                       float(raw["ts"]), raw["etype"],
                                       raw["item_id"], int(raw.get("platform", 0))))
    return events


def load_personas(path: str) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {c: np.asarray(v, dtype=np.float64) for c, v in raw.items()}


def load_truth(path: str) -> list[PlantedPair]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return [PlantedPair(p["og_pt"], p["gm_pt"], float(p["strength"])) for p in raw]
