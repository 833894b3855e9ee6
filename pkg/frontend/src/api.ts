import type {
  ApiErrorBody,
  Carousel,
  CartEvent,
  CartSnapshot,
  EventAck,
  HealthResponse,
  ItemDetail,
  ModelTag,
  SearchResponse,
} from "./types.js";

/** Error raised for non-2xx responses; carries the service's {code, message}. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface RecommendationOptions {
  k?: number;
  model?: ModelTag;
  explain?: boolean;
  maxPerPt?: number;
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    public readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let body: Partial<ApiErrorBody> = {};
      try {
        body = (await resp.json()) as Partial<ApiErrorBody>;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(
        resp.status,
        body.code ?? "http_error",
        body.message ?? `HTTP ${resp.status}`,
      );
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/healthz");
  }

  getItem(itemId: string): Promise<ItemDetail> {
    return this.request(`/v1/items/${encodeURIComponent(itemId)}`);
  }

  searchItems(q: string, segment = "", limit = 25): Promise<SearchResponse> {
    const params = new URLSearchParams();
    if (q) params.set("q", q);
    if (segment) params.set("segment", segment);
    params.set("limit", String(limit));
    return this.request(`/v1/items?${params.toString()}`);
  }

  postEvent(cartId: string, event: CartEvent): Promise<EventAck> {
    return this.request(`/v1/carts/${encodeURIComponent(cartId)}/events`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(event),
    });
  }

  getCart(cartId: string): Promise<CartSnapshot> {
    return this.request(`/v1/carts/${encodeURIComponent(cartId)}`);
  }

  getRecommendations(
    cartId: string,
    opts: RecommendationOptions = {},
  ): Promise<Carousel> {
    const params = new URLSearchParams();
    params.set("k", String(opts.k ?? 12));
    params.set("model", opts.model ?? "ranker");
    if (opts.explain) params.set("explain", "true");
    if (opts.maxPerPt && opts.maxPerPt > 0) {
      params.set("max_per_pt", String(opts.maxPerPt));
    }
    return this.request(
      `/v1/carts/${encodeURIComponent(cartId)}/recommendations?${params.toString()}`,
    );
  }
}
