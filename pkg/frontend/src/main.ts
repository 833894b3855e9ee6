import { ApiClient } from "./api.js";
import { apiBase } from "./config.js";
import {
  renderCarousel,
  renderCart,
  renderDetailDrawer,
  renderError,
  renderSearchResults,
} from "./render.js";
import { UiSession } from "./session.js";
import type { CarouselItem, ItemSummary, ModelTag } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const client = new ApiClient(apiBase());
const cartId = `ui-${Date.now()}-${Math.floor(Math.random() * 1e6)}`;
const session = new UiSession(client, cartId);
const compareSession = new UiSession(client, cartId);
compareSession.model = "heuristic";

const titles = new Map<string, string>();
let searchHits: ItemSummary[] = [];
let compareEnabled = false;

function candidateById(itemId: string): CarouselItem | undefined {
  return session.carousel?.items.find((c) => c.item_id === itemId);
}

function draw(): void {
  el("cart").innerHTML = renderCart(session.cartItems, titles);
  el("carousel-primary").innerHTML = renderCarousel(session.carousel);
  el("error").innerHTML = renderError(session.lastError);
  el("carousel-secondary").innerHTML = compareEnabled
    ? renderCarousel(compareSession.carousel)
    : "";
}

session.onChange(draw);
compareSession.onChange(draw);

async function runSearch(): Promise<void> {
  const q = el<HTMLInputElement>("search-box").value;
  const resp = await client.searchItems(q, "OG", 25);
  searchHits = resp.items;
  for (const it of searchHits) titles.set(it.item_id, it.title);
  el("search-results").innerHTML = renderSearchResults(searchHits);
}

async function refreshBoth(): Promise<void> {
  await session.refresh();
  if (compareEnabled) await compareSession.refresh();
}

function wire(): void {
  el("search-box").addEventListener("keyup", (ev) => {
    if ((ev as KeyboardEvent).key === "Enter") void runSearch();
  });
  el("search-btn").addEventListener("click", () => void runSearch());

  el("search-results").addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button.add");
    if (!btn) return;
    const itemId = btn.getAttribute("data-item-id");
    if (itemId) {
      void session.addItem(itemId).then(() => {
        if (compareEnabled) void compareSession.refresh();
      });
    }
  });

  el("cart").addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button.remove");
    if (!btn) return;
    const itemId = btn.getAttribute("data-item-id");
    if (itemId) {
      void session.removeItem(itemId).then(() => {
        if (compareEnabled) void compareSession.refresh();
      });
    }
  });

  el("carousel-primary").addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button.detail");
    if (!btn) return;
    const itemId = btn.getAttribute("data-item-id");
    const cand = itemId ? candidateById(itemId) : undefined;
    if (cand) {
      el("drawer").innerHTML = renderDetailDrawer(
        cand,
        titles.get(cand.item_id) ?? cand.item_id,
      );
    }
  });

  el<HTMLSelectElement>("model-select").addEventListener("change", (ev) => {
    const tag = (ev.target as HTMLSelectElement).value as ModelTag;
    void session.setModel(tag);
  });

  el<HTMLInputElement>("compare-toggle").addEventListener("change", (ev) => {
    compareEnabled = (ev.target as HTMLInputElement).checked;
    if (compareEnabled) void compareSession.refresh();
    else draw();
  });

  el<HTMLInputElement>("k-input").addEventListener("change", (ev) => {
    const k = Number((ev.target as HTMLInputElement).value) || 12;
    void session.setParams({ k });
    void compareSession.setParams({ k });
  });

  el<HTMLInputElement>("max-per-pt-input").addEventListener("change", (ev) => {
    const maxPerPt = Number((ev.target as HTMLInputElement).value) || 0;
    void session.setParams({ maxPerPt });
    void compareSession.setParams({ maxPerPt });
  });
}

wire();
void refreshBoth();
void client.health().then((h) => {
  el("status").textContent = h.ranker
    ? "service up (neural ranker loaded)"
    : "service up (heuristic only)";
});
