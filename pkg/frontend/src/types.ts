/** Shapes of the serving API's JSON payloads. */

export interface ItemSummary {
  item_id: string;
  title: string;
  product_type: string;
  segment: string;
  price: number;
}

export interface ItemDetail extends ItemSummary {
  category: string;
}

export interface SearchResponse {
  items: ItemSummary[];
}

export type ModelTag = "ranker" | "heuristic";

export interface CartEvent {
  type: "add" | "remove";
  item_id: string;
  ts?: number;
}

export interface EventAck {
  cart_id: string;
  cart_size: number;
  pool_size: number;
}

export interface CartSnapshot {
  cart_id: string;
  entries: { item_id: string; ts: number }[];
  platform: string | null;
  anchors: string[];
  pool: string[];
  pool_size: number;
}

/** Per-candidate provenance, present when explain=true was requested. */
export interface CandidateExplanation {
  anchor_item_id: string;
  source: string;
  llm_rec: string | null;
  ce_score: number | null;
  llm_score: number | null;
  combined: number | null;
  band: string | null;
}

export interface CarouselItem {
  item_id: string;
  score: number;
  source: string;
  band: string | null;
  explanation?: CandidateExplanation;
}

export interface Carousel {
  items: CarouselItem[];
  generated_at: number;
  model_tag: string;
}

export interface HealthResponse {
  status: string;
  ranker: boolean;
}

/** Error body the service returns for 4xx responses. */
export interface ApiErrorBody {
  code: string;
  message: string;
}
