import { ApiClient, ApiError } from "./api.js";
import type {
  ApiErrorBody,
  Carousel,
  CartEvent,
  ModelTag,
} from "./types.js";

export interface SessionParams {
  k: number;
  maxPerPt: number;
  explain: boolean;
}

const DEFAULT_PARAMS: SessionParams = { k: 12, maxPerPt: 0, explain: true };

/**
 * One live cart session: optimistic cart state, acknowledged event history,
 * and the latest carousel snapshot.
 *
 * Every carousel fetch is tagged with a monotone per-cart sequence number;
 * a response whose tag is older than the newest applied one is discarded,
 * so the rendered carousel always reflects the last acknowledged server
 * state even when responses arrive out of order.
 */
export class UiSession {
  readonly cartId: string;
  model: ModelTag = "ranker";
  params: SessionParams;

  /** Optimistic cart contents (item ids, in add order). */
  cartItems: string[] = [];
  /** Server-acknowledged events, replayable against a fresh cart. */
  readonly eventHistory: CartEvent[] = [];
  /** Last acknowledged carousel, or null before the first fetch. */
  carousel: Carousel | null = null;
  lastError: ApiErrorBody | null = null;

  private seq = 0;
  private applied = 0;
  private clock = 0;
  private readonly listeners: (() => void)[] = [];

  constructor(
    private readonly client: ApiClient,
    cartId: string,
    params: Partial<SessionParams> = {},
  ) {
    this.cartId = cartId;
    this.params = { ...DEFAULT_PARAMS, ...params };
  }

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  private recordError(err: unknown): void {
    this.lastError =
      err instanceof ApiError
        ? { code: err.code, message: err.message }
        : { code: "client_error", message: String(err) };
  }

  async addItem(itemId: string): Promise<boolean> {
    return this.sendEvent({ type: "add", item_id: itemId, ts: this.clock++ });
  }

  async removeItem(itemId: string): Promise<boolean> {
    return this.sendEvent({ type: "remove", item_id: itemId });
  }

  /**
   * Apply the event optimistically, then confirm with the server. On
   * failure the optimistic change is rolled back and the error surfaced.
   */
  private async sendEvent(event: CartEvent): Promise<boolean> {
    const before = [...this.cartItems];
    if (event.type === "add") {
      this.cartItems.push(event.item_id);
    } else {
      const idx = this.cartItems.indexOf(event.item_id);
      if (idx >= 0) this.cartItems.splice(idx, 1);
    }
    this.lastError = null;
    this.notify();
    try {
      await this.client.postEvent(this.cartId, event);
    } catch (err) {
      this.cartItems = before;
      this.recordError(err);
      this.notify();
      return false;
    }
    this.eventHistory.push(event);
    await this.refresh();
    return true;
  }

  /** Fetch a fresh carousel; stale responses are discarded. */
  async refresh(): Promise<void> {
    const mySeq = ++this.seq;
    let carousel: Carousel;
    try {
      carousel = await this.client.getRecommendations(this.cartId, {
        k: this.params.k,
        model: this.model,
        explain: this.params.explain,
        maxPerPt: this.params.maxPerPt,
      });
    } catch (err) {
      if (mySeq > this.applied) this.recordError(err);
      this.notify();
      return;
    }
    if (mySeq <= this.applied) {
      return; // a newer response already landed
    }
    this.applied = mySeq;
    this.carousel = carousel;
    this.lastError = null;
    this.notify();
  }

  async setModel(tag: ModelTag): Promise<void> {
    this.model = tag;
    await this.refresh();
  }

  async setParams(params: Partial<SessionParams>): Promise<void> {
    this.params = { ...this.params, ...params };
    await this.refresh();
  }

  /**
   * Replay the acknowledged event history against a fresh cart id and
   * return the resulting carousel. Used to check that the rendered state
   * is a pure function of the history.
   */
  async replayInto(cartId: string): Promise<Carousel> {
    for (const event of this.eventHistory) {
      await this.client.postEvent(cartId, event);
    }
    return this.client.getRecommendations(cartId, {
      k: this.params.k,
      model: this.model,
      explain: this.params.explain,
      maxPerPt: this.params.maxPerPt,
    });
  }
}
