import type {
  ApiErrorBody,
  Carousel,
  CarouselItem,
  ItemSummary,
} from "./types.js";

/** Pure HTML-string renderers so view logic is testable without a DOM. */

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSearchResults(items: ItemSummary[]): string {
  if (items.length === 0) {
    return `<p class="empty">no matching items</p>`;
  }
  const rows = items
    .map(
      (it) => `<li class="search-hit" data-item-id="${esc(it.item_id)}">
        <span class="title">${esc(it.title)}</span>
        <span class="pt">${esc(it.product_type)}</span>
        <span class="price">$${it.price.toFixed(2)}</span>
        <button class="add" data-item-id="${esc(it.item_id)}">add</button>
      </li>`,
    )
    .join("\n");
  return `<ul class="search-results">${rows}</ul>`;
}

export function renderCart(
  itemIds: string[],
  titles: Map<string, string>,
): string {
  if (itemIds.length === 0) {
    return `<p class="empty">cart is empty</p>`;
  }
  const rows = itemIds
    .map(
      (id) => `<li class="cart-row" data-item-id="${esc(id)}">
        <span class="title">${esc(titles.get(id) ?? id)}</span>
        <button class="remove" data-item-id="${esc(id)}">remove</button>
      </li>`,
    )
    .join("\n");
  return `<ul class="cart">${rows}</ul>`;
}

function renderCandidate(item: CarouselItem): string {
  const band = item.band ? ` <span class="band">${esc(item.band)}</span>` : "";
  return `<li class="candidate" data-item-id="${esc(item.item_id)}">
    <button class="detail" data-item-id="${esc(item.item_id)}">
      <span class="cand-id">${esc(item.item_id)}</span>
      <span class="score">${item.score.toFixed(4)}</span>
      <span class="source">${esc(item.source)}</span>${band}
    </button>
  </li>`;
}

export function renderCarousel(carousel: Carousel | null): string {
  if (!carousel || carousel.items.length === 0) {
    return `<p class="empty carousel-empty">no recommendations</p>`;
  }
  const rows = carousel.items.map(renderCandidate).join("\n");
  return `<ol class="carousel" data-model="${esc(carousel.model_tag)}">${rows}</ol>`;
}

export function renderDetailDrawer(item: CarouselItem, title: string): string {
  const exp = item.explanation;
  const fields: [string, string][] = [
    ["item", `${title} (${item.item_id})`],
    ["rank score", item.score.toFixed(6)],
    ["source", item.source],
    ["band", item.band ?? "—"],
  ];
  if (exp) {
    fields.push(
      ["anchor", exp.anchor_item_id],
      ["llm rec", exp.llm_rec ?? "—"],
      ["ce score", exp.ce_score == null ? "—" : exp.ce_score.toFixed(4)],
      ["llm score", exp.llm_score == null ? "—" : exp.llm_score.toFixed(4)],
      ["combined", exp.combined == null ? "—" : exp.combined.toFixed(4)],
    );
  }
  const rows = fields
    .map(
      ([k, v]) =>
        `<tr><th>${esc(k)}</th><td>${esc(v)}</td></tr>`,
    )
    .join("\n");
  return `<table class="detail-drawer">${rows}</table>`;
}

export function renderError(error: ApiErrorBody | null): string {
  if (!error) return "";
  return `<div class="error-banner">[${esc(error.code)}] ${esc(error.message)}</div>`;
}
