import numpy as np
import pytest

from xprec.catalog import Catalog, ItemRecord, add_item


def make_catalog(n_og: int = 6, n_gm: int = 9) -> Catalog:
    """Small two-segment catalog with deterministic contents."""
    cat = Catalog()
    og_pts = ["Ground Coffee", "Dog Food", "Pancake Mix"]
    gm_pts = ["Travel Mugs", "Dog Beds", "Griddle Pans"]
    for i in range(n_og):
        pt = og_pts[i % len(og_pts)]
        add_item(cat, ItemRecord(
            item_id=f"og{i:03d}", title=f"brand {i} {pt.lower()}",
            product_type=pt, category="pantry", segment="OG",
            price=3.0 + i))
    for i in range(n_gm):
        pt = gm_pts[i % len(gm_pts)]
        add_item(cat, ItemRecord(
            item_id=f"gm{i:03d}", title=f"maker {i} {pt.lower()}",
            product_type=pt, category="kitchen", segment="GM",
            price=15.0 + i))
    cat.set_popularity({i: float(len(cat.items) - k)
                        for k, i in enumerate(sorted(cat.items))})
    return cat


@pytest.fixture
def catalog():
    return make_catalog()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
