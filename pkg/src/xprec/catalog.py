"""Item catalog: loading, validation, and product-type indexing.

The catalog is the shared lookup structure for every other module. It is
immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DuplicateItemId, MalformedRecord, UnknownProductType, UnknownSegment

SEGMENTS = ("OG", "GM")

REQUIRED_KEYS = ("item_id", "title", "product_type", "category", "segment", "price")


@dataclass(frozen=True)
class ItemRecord:
    item_id: str
    title: str
    product_type: str
    category: str
    segment: str  # "OG" or "GM"
    price: float

    def __post_init__(self):
        if self.segment not in SEGMENTS:
            raise UnknownSegment(self.segment)
        if self.price < 0:
            raise ValueError(f"negative price for {self.item_id}")
        if not self.product_type:
            raise ValueError(f"empty product_type for {self.item_id}")

    @property
    def text(self) -> str:
        """Item text used for embedding: title plus hierarchy metadata."""
        return f"{self.title} | {self.product_type} | {self.category}"


@dataclass
class Catalog:
    items: dict[str, ItemRecord] = field(default_factory=dict)
    pt_index: dict[str, list[str]] = field(default_factory=dict)
    popularity: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)

    def get(self, item_id: str) -> ItemRecord | None:
        return self.items.get(item_id)

    def __getitem__(self, item_id: str) -> ItemRecord:
        return self.items[item_id]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.items

    def product_types(self, segment: str | None = None) -> list[str]:
        """Sorted PT names, optionally restricted to one segment."""
        pts = set()
        for item in self.items.values():
            if segment is None or item.segment == segment:
                pts.add(item.product_type)
        return sorted(pts)

    def pt_of(self, item_id: str) -> str:
        return self.items[item_id].product_type

    def set_popularity(self, popularity: dict[str, float]) -> None:
        self.popularity = {k: v for k, v in popularity.items() if k in self.items}


def add_item(catalog: Catalog, item: ItemRecord) -> None:
    if item.item_id in catalog.items:
        raise DuplicateItemId(item.item_id)
    catalog.items[item.item_id] = item
    catalog.pt_index.setdefault(item.product_type, []).append(item.item_id)


def load_catalog(path: str) -> Catalog:
    """Load a JSON-lines catalog file.

    Each line is an object with keys item_id, title, product_type, category,
    segment ("OG"|"GM"), price. Duplicate ids and malformed lines are errors.
    """
    catalog = Catalog()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if not isinstance(raw, dict) or any(k not in raw for k in REQUIRED_KEYS):
                missing = [k for k in REQUIRED_KEYS if k not in raw]
                raise MalformedRecord(line_no, f"missing keys {missing}")
            try:
                item = ItemRecord(
                    item_id=str(raw["item_id"]),
                    title=str(raw["title"]),
                    product_type=str(raw["product_type"]),
                    category=str(raw["category"]),
                    segment=raw["segment"],
                    price=float(raw["price"]),
                )
            except UnknownSegment:
                raise
            except (TypeError, ValueError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            add_item(catalog, item)
    for ids in catalog.pt_index.values():
        ids.sort()
    return catalog


def popular_items_in_pt(catalog: Catalog, pt: str, k: int) -> list[str]:
    """Top-k item ids of a PT by descending popularity, id ascending on ties."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if pt not in catalog.pt_index:
        raise UnknownProductType(pt)
    ids = catalog.pt_index[pt]
    ordered = sorted(ids, key=lambda i: (-catalog.popularity.get(i, 0.0), i))
    return ordered[:k]
