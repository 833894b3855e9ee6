"""Cart-context neural ranker.

Scores a GM candidate against the current cart: item features are embedded
and projected to a shared space, the cart is encoded with a (pluggable)
encoder, a cross-attention head fuses candidate and cart, and an MLP over
[mean cart encoding, fused candidate, platform embedding, projected persona]
produces the scalar relevance. Training supports pairwise-hinge and
listwise-softmax objectives; evaluation reports NDCG against a persona/count
heuristic baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .catalog import Catalog
from .errors import (
    EmptyCart,
    EmptyPositives,
    EmptyTestSet,
    NonFiniteLoss,
    UnknownItem,
)
from .nn import (
    AttentionParams,
    Linear,
    Module,
    Tensor,
    TransformerEncoder,
    glorot,
    load_checkpoint,
    save_checkpoint,
    scaled_dot_attention,
)
from .retrieval import TextEmbedder
from .scoring import ScoredCandidate

CART_BUCKETS = [("<10", 1, 9), ("10-20", 10, 20), ("20-30", 21, 30),
                ("30-40", 31, 40), ("40-50", 41, 50)]


# ---------------------------------------------------------------------------
# Config and data types
# ---------------------------------------------------------------------------

@dataclass
class RankerConfig:
    title_dim: int = 768
    pt_dim: int = 768
    price_dim: int = 16
    type_dim: int = 8
    proj_dim: int = 128
    persona_in: int = 64
    persona_dim: int = 128
    platform_dim: int = 8
    n_platforms: int = 4
    layers: int = 4
    heads: int = 4
    max_cart: int = 50
    encoder: str = "transformer"  # "transformer" | "identity" | "bilstm"
    cross_attention: bool = True
    loss: str = "listwise_softmax"  # or "pairwise_hinge"
    delta: float = 5.0
    tau: float = 5.0
    lr: float = 1e-3
    epochs: int = 10
    batch: int = 8
    seed: int = 0
    mlp_hidden: tuple[int, int] = (256, 64)

    def __post_init__(self):
        if self.proj_dim % self.heads != 0:
            raise ValueError("proj_dim must be divisible by heads")
        if self.max_cart < 1:
            raise ValueError("max_cart must be >= 1")
        if isinstance(self.mlp_hidden, list):
            self.mlp_hidden = tuple(self.mlp_hidden)

    @staticmethod
    def desk(**overrides) -> "RankerConfig":
        """Small profile for tests and laptop-scale experiments."""
        base = dict(title_dim=32, pt_dim=32, price_dim=4, type_dim=4,
                    proj_dim=32, persona_dim=32, layers=2, heads=4,
                    mlp_hidden=(64, 32))
        base.update(overrides)
        return RankerConfig(**base)


@dataclass
class CartState:
    cart_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)  # (item_id, add_ts)
    persona: np.ndarray = None
    platform: int = 0

    def __post_init__(self):
        if self.persona is None:
            self.persona = np.zeros(64)
        self.persona = np.asarray(self.persona, dtype=np.float64)
        self.entries.sort(key=lambda e: (e[1], e[0]))

    def item_ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]

    def recent_items(self, max_cart: int) -> list[str]:
        """Most recently added max_cart entries, in add order."""
        return [item_id for item_id, _ in self.entries[-max_cart:]]


@dataclass
class TrainingExample:
    cart: CartState
    positives: frozenset[str]
    negatives: frozenset[str]

    def __post_init__(self):
        self.positives = frozenset(self.positives)
        self.negatives = frozenset(self.negatives)
        if not self.positives:
            raise EmptyPositives("training example needs at least one positive")
        if self.positives & self.negatives:
            raise ValueError("positives and negatives overlap")


# ---------------------------------------------------------------------------
# Cart encoders
# ---------------------------------------------------------------------------

class IdentityEncoder(Module):
    """No mixing: cart representation is just the projected item vectors."""

    def __call__(self, X: Tensor) -> Tensor:
        return X


class BiLstmEncoder(Module):
    """Single-layer bidirectional LSTM; direction outputs concatenated and
    projected back to the shared dimension."""

    def __init__(self, rng: np.random.Generator, d_model: int):
        self.d = d_model
        self.fwd = Linear(rng, 2 * d_model, 4 * d_model)
        self.bwd = Linear(rng, 2 * d_model, 4 * d_model)
        self.out = Linear(rng, 2 * d_model, d_model)

    def _run(self, X: Tensor, cell: Linear, reverse: bool) -> list[Tensor]:
        n = X.shape[0]
        d = self.d
        h = Tensor(np.zeros((1, d)))
        c = Tensor(np.zeros((1, d)))
        order = range(n - 1, -1, -1) if reverse else range(n)
        outs: dict[int, Tensor] = {}
        for t in order:
            x_t = X[t:t + 1]
            gates = cell(Tensor.concat([x_t, h], axis=1))
            i_g = gates[:, 0:d].sigmoid()
            f_g = gates[:, d:2 * d].sigmoid()
            o_g = gates[:, 2 * d:3 * d].sigmoid()
            g_g = gates[:, 3 * d:4 * d].tanh()
            c = f_g * c + i_g * g_g
            h = o_g * c.tanh()
            outs[t] = h
        return [outs[t] for t in range(n)]

    def __call__(self, X: Tensor) -> Tensor:
        f = self._run(X, self.fwd, reverse=False)
        b = self._run(X, self.bwd, reverse=True)
        rows = [Tensor.concat([f[t], b[t]], axis=1) for t in range(X.shape[0])]
        return self.out(Tensor.concat(rows, axis=0))


def _make_encoder(rng: np.random.Generator, config: RankerConfig) -> Module:
    if config.encoder == "transformer":
        return TransformerEncoder(rng, config.proj_dim, config.layers, config.heads)
    if config.encoder == "identity":
        return IdentityEncoder()
    if config.encoder == "bilstm":
        return BiLstmEncoder(rng, config.proj_dim)
    raise ValueError(f"unknown encoder {config.encoder!r}")


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

def _head_affine(fused: Tensor, pooled: Tensor, e_p: Tensor, e_u: Tensor,
                 W: Tensor, b: Tensor, proj: int, platform_dim: int) -> Tensor:
    """First scorer-MLP layer over [pooled | fused | platform | persona]
    applied blockwise against row slices of W, as a single graph node.

    fused is (m, proj); pooled, e_p, e_u are single rows broadcast over the
    m candidates.
    """
    Wd = W.data
    w_pool = Wd[0:proj]
    w_fused = Wd[proj:2 * proj]
    w_plat = Wd[2 * proj:2 * proj + platform_dim]
    w_pers = Wd[2 * proj + platform_dim:]
    data = (fused.data @ w_fused + pooled.data @ w_pool
            + e_p.data @ w_plat + e_u.data @ w_pers + b.data)

    def backward(g):
        g1 = g.sum(axis=0, keepdims=True)
        g_fused = g @ w_fused.T if fused.requires_grad else None
        g_pooled = g1 @ w_pool.T if pooled.requires_grad else None
        g_ep = g1 @ w_plat.T if e_p.requires_grad else None
        g_eu = g1 @ w_pers.T if e_u.requires_grad else None
        if W.requires_grad:
            gW = np.zeros_like(Wd)
            gW[0:proj] = pooled.data.T @ g1
            gW[proj:2 * proj] = fused.data.T @ g
            gW[2 * proj:2 * proj + platform_dim] = e_p.data.T @ g1
            gW[2 * proj + platform_dim:] = e_u.data.T @ g1
        else:
            gW = None
        gb = g1[0] if b.requires_grad else None
        return (g_fused, g_pooled, g_ep, g_eu, gW, gb)

    return W._make(data, (fused, pooled, e_p, e_u, W, b), backward)


class RankerModel(Module):
    """All learned parameters plus the item feature cache."""

    def __init__(self, config: RankerConfig, catalog: Catalog, embedder: TextEmbedder,
                 rng: np.random.Generator | None = None):
        if embedder.dim != config.title_dim or embedder.dim != config.pt_dim:
            raise ValueError(
                f"embedder dim {embedder.dim} must match title/pt dims "
                f"({config.title_dim}/{config.pt_dim})"
            )
        rng = rng or np.random.default_rng(config.seed)
        self.config = config
        self.catalog = catalog
        self.embedder = embedder

        concat_dim = config.title_dim + config.pt_dim + config.price_dim + config.type_dim
        self.price_proj = Linear(rng, 1, config.price_dim)
        self.type_table = Tensor.param(glorot(rng, 2, config.type_dim))
        self.item_proj = Tensor.param(glorot(rng, concat_dim, config.proj_dim))
        self.persona_proj = Linear(rng, config.persona_in, config.persona_dim)
        self.platform_table = Tensor.param(glorot(rng, config.n_platforms, config.platform_dim))
        self.encoder = _make_encoder(rng, config)
        self.cross = AttentionParams.init(rng, config.proj_dim, config.proj_dim)

        mlp_in = 2 * config.proj_dim + config.platform_dim + config.persona_dim
        h1, h2 = config.mlp_hidden
        self.mlp_fc1 = Linear(rng, mlp_in, h1)
        self.mlp_fc2 = Linear(rng, h1, h2)
        self.mlp_out = Linear(rng, h2, 1)

        # Static per-item features: [title emb | pt emb | log1p(price) | type idx]
        self._static: dict[str, tuple[np.ndarray, float, int]] = {}

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name in ("price_proj", "persona_proj", "encoder", "cross",
                     "mlp_fc1", "mlp_fc2", "mlp_out"):
            child = getattr(self, name)
            key = f"{prefix}.{name}" if prefix else name
            out.update(child.named_params(key))
        for name in ("type_table", "item_proj", "platform_table"):
            out[f"{prefix}.{name}" if prefix else name] = getattr(self, name)
        return out

    def param_count(self) -> int:
        return sum(t.data.size for t in self.params())

    # -- item representation -------------------------------------------

    def _static_features(self, item_id: str) -> tuple[np.ndarray, float, int]:
        cached = self._static.get(item_id)
        if cached is None:
            item = self.catalog.get(item_id)
            if item is None:
                raise UnknownItem(item_id)
            title_vec = self.embedder.embed(item.title)
            pt_vec = self.embedder.embed(item.product_type)
            cached = (
                np.concatenate([title_vec, pt_vec]),
                math.log1p(item.price),
                0 if item.segment == "OG" else 1,
            )
            self._static[item_id] = cached
        return cached

    def item_block(self, item_ids: list[str]) -> Tensor:
        """Projected representations for a batch of items: (m, proj_dim).

        One graph node over [static text feats | price proj | type emb] @ W_r;
        parameters are the price projection, type table, and item projection.
        """
        feats = [self._static_features(i) for i in item_ids]
        static = np.stack([f[0] for f in feats])
        prices = np.array([[f[1]] for f in feats])
        type_idx = np.array([f[2] for f in feats])

        w_p, b_p = self.price_proj.W, self.price_proj.b
        t_tab, w_r = self.type_table, self.item_proj
        full = np.concatenate(
            [static, prices @ w_p.data + b_p.data, t_tab.data[type_idx]], axis=1)
        data = full @ w_r.data
        c0 = static.shape[1]
        c1 = c0 + w_p.data.shape[1]

        def backward(g):
            g_full = g @ w_r.data.T
            g_wr = full.T @ g if w_r.requires_grad else None
            g_price = g_full[:, c0:c1]
            g_wp = prices.T @ g_price if w_p.requires_grad else None
            g_bp = g_price.sum(axis=0) if b_p.requires_grad else None
            if t_tab.requires_grad:
                g_tab = np.zeros_like(t_tab.data)
                np.add.at(g_tab, type_idx, g_full[:, c1:])
            else:
                g_tab = None
            return (g_wp, g_bp, g_tab, g_wr)

        return w_r._make(data, (w_p, b_p, t_tab, w_r), backward)

    # -- scoring -------------------------------------------------------

    def _encode_cart(self, cart: CartState) -> Tensor:
        ids = cart.recent_items(self.config.max_cart)
        if not ids:
            raise EmptyCart(f"cart {cart.cart_id} is empty")
        return self.encoder(self.item_block(ids))

    def score_batch(self, cart: CartState, candidate_ids: list[str]) -> Tensor:
        """Scores for all candidates against one cart: shape (m,)."""
        encoded = self._encode_cart(cart)
        pooled = encoded.mean(axis=0, keepdims=True)  # (1, proj)
        reprs = self.item_block(candidate_ids)        # (m, proj)

        if self.config.cross_attention:
            d_k = self.cross.W_Q.shape[1]
            q = reprs @ self.cross.W_Q
            k = encoded @ self.cross.W_K
            v = encoded @ self.cross.W_V
            # Residual keeps the candidate identity visible even when the
            # attention distribution saturates.
            fused = scaled_dot_attention(q, k, v, 1.0 / math.sqrt(d_k)) + reprs
        else:
            fused = reprs

        e_p = self.platform_table[cart.platform:cart.platform + 1]
        e_u = self.persona_proj(Tensor(cart.persona.reshape(1, -1)))

        # First MLP layer applied blockwise; broadcast rows stand in for
        # tiling the shared [pooled cart, platform, persona] features.
        h = _head_affine(fused, pooled, e_p, e_u, self.mlp_fc1.W, self.mlp_fc1.b,
                         self.config.proj_dim, self.config.platform_dim)
        h = self.mlp_out(self.mlp_fc2(h.gelu()).gelu())
        return h.reshape(-1)

    def score(self, cart: CartState, candidate_id: str) -> float:
        return float(self.score_batch(cart, [candidate_id]).data[0])


def item_repr(item_id: str, model: RankerModel) -> np.ndarray:
    """Projected representation of one catalog item (proj_dim,)."""
    return model.item_block([item_id]).data[0]


def score(cart: CartState, candidate: str, model: RankerModel,
          catalog: Catalog | None = None, embedder: TextEmbedder | None = None) -> float:
    return model.score(cart, candidate)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def pairwise_hinge_loss(s_pos: float, s_neg: float, delta: float = 5.0) -> float:
    """max(0, delta - (s_pos - s_neg)); zero once the margin is satisfied."""
    return max(0.0, delta - (s_pos - s_neg))


def listwise_softmax_loss(scores: dict[str, float], positives, negatives,
                          tau: float = 5.0) -> float:
    """Temperature-scaled NLL of the positives within the scored list."""
    positives, negatives = set(positives), set(negatives)
    if not positives:
        raise EmptyPositives("listwise loss needs at least one positive")
    if positives & negatives:
        raise ValueError("positives and negatives overlap")
    pool = sorted(positives | negatives)
    missing = [i for i in pool if i not in scores]
    if missing:
        raise KeyError(f"scores missing for {missing}")
    s = np.array([scores[i] / tau for i in pool])
    s -= s.max()
    log_z = math.log(np.exp(s).sum())
    loss = 0.0
    for i, item in enumerate(pool):
        if item in positives:
            loss -= s[i] - log_z
    return loss / len(positives)


def _listwise_loss_t(scores: Tensor, pos_mask: np.ndarray, tau: float) -> Tensor:
    scaled = scores * (1.0 / tau)
    shifted = scaled - Tensor(scaled.data.max())
    log_z = shifted.exp().sum().log()
    pos = shifted[np.nonzero(pos_mask)[0]]
    return (log_z - pos.mean()) if pos.shape[0] else Tensor(0.0)


def _pairwise_loss_t(scores: Tensor, pos_mask: np.ndarray, delta: float) -> Tensor:
    pos_idx = np.nonzero(pos_mask)[0]
    neg_idx = np.nonzero(~pos_mask)[0]
    if len(neg_idx) == 0:
        return Tensor(0.0)
    pos = scores[pos_idx].reshape(-1, 1)
    neg = scores[neg_idx].reshape(1, -1)
    margins = (neg - pos + delta).relu()
    return margins.mean()


# ---------------------------------------------------------------------------
# Session labeling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    customer_id: str
    ts: float
    etype: str  # "add" | "view" | "click" | "atc"
    item_id: str
    platform: int = 0


def label_sessions(
    events: list[SessionEvent],
    catalog: Catalog,
    personas: dict[str, np.ndarray],
    horizon_days: int = 7,
    neg_per_pos: int = 8,
    seed: int = 0,
) -> list[TrainingExample]:
    """Build training examples from a session event log.

    Positives: GM items clicked in-session whose add-to-cart by the same
    customer lands within the horizon (day-7 inclusive). Negatives: GM items
    viewed but not clicked, down-sampled to neg_per_pos per positive.
    Sessions without an OG cart item or any GM view are skipped.
    """
    horizon = horizon_days * 86400
    rng = np.random.default_rng(seed)

    atc_by_customer: dict[str, dict[str, list[float]]] = {}
    sessions: dict[str, list[SessionEvent]] = {}
    for ev in events:
        if ev.etype == "atc":
            atc_by_customer.setdefault(ev.customer_id, {}).setdefault(ev.item_id, []).append(ev.ts)
        sessions.setdefault(ev.session_id, []).append(ev)

    examples = []
    for session_id in sorted(sessions):
        evs = sorted(sessions[session_id], key=lambda e: (e.ts, e.item_id))
        customer = evs[0].customer_id
        cart_items = [(e.item_id, e.ts) for e in evs
                      if e.etype == "add" and e.item_id in catalog]
        has_og = any(catalog[i].segment == "OG" for i, _ in cart_items)
        gm_views = {e.item_id: e.ts for e in evs
                    if e.etype == "view" and e.item_id in catalog
                    and catalog[e.item_id].segment == "GM"}
        if not has_og or not gm_views:
            continue
        clicks = {e.item_id: e.ts for e in evs
                  if e.etype == "click" and e.item_id in gm_views}

        positives = set()
        for item_id, click_ts in clicks.items():
            atcs = atc_by_customer.get(customer, {}).get(item_id, [])
            if any(0 <= ts - click_ts <= horizon for ts in atcs):
                positives.add(item_id)
        negatives = sorted(set(gm_views) - set(clicks) - positives)
        if not positives:
            continue
        cap = neg_per_pos * len(positives)
        if len(negatives) > cap:
            pick = rng.choice(len(negatives), size=cap, replace=False)
            negatives = [negatives[i] for i in sorted(pick)]

        persona = personas.get(customer, np.zeros(64))
        cart = CartState(cart_id=session_id, entries=cart_items,
                         persona=persona, platform=evs[0].platform)
        examples.append(TrainingExample(cart, frozenset(positives), frozenset(negatives)))
    return examples


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

class Adam:
    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            m_hat = self.m[i] / (1 - self.b1 ** self.t)
            v_hat = self.v[i] / (1 - self.b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None


def example_loss(model: RankerModel, ex: TrainingExample) -> Tensor:
    pool = sorted(ex.positives) + sorted(ex.negatives)
    pos_mask = np.array([i < len(ex.positives) for i in range(len(pool))])
    scores = model.score_batch(ex.cart, pool)
    if model.config.loss == "pairwise_hinge":
        return _pairwise_loss_t(scores, pos_mask, model.config.delta)
    return _listwise_loss_t(scores, pos_mask, model.config.tau)


def train(
    examples: list[TrainingExample],
    config: RankerConfig,
    catalog: Catalog,
    embedder: TextEmbedder,
    seed: int | None = None,
) -> tuple[RankerModel, list[float]]:
    """Mini-batch Adam training; deterministic given the seed."""
    if not examples:
        raise EmptyTestSet("no training examples")
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    model = RankerModel(config, catalog, embedder, rng=np.random.default_rng(seed))
    params = model.params()
    opt = Adam(params, lr=config.lr)

    trace = []
    order = np.arange(len(examples))
    for _ in range(config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch):
            batch = order[start:start + config.batch]
            opt.zero_grad()
            total = None
            for idx in batch:
                loss = example_loss(model, examples[idx])
                total = loss if total is None else total + loss
            total = total * (1.0 / len(batch))
            value = total.item()
            if not math.isfinite(value):
                raise NonFiniteLoss(f"loss became {value}")
            total.backward()
            opt.step()
            epoch_loss += value * len(batch)
        trace.append(epoch_loss / len(order))
    return model, trace


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_ranker(model: RankerModel, path: str) -> None:
    """Binary parameter table plus a JSON config sidecar at <path>.json."""
    save_checkpoint(model.named_params(), path)
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(asdict(model.config), fh, sort_keys=True, indent=2)


def load_ranker(path: str, catalog: Catalog, embedder: TextEmbedder) -> RankerModel:
    with open(path + ".json", encoding="utf-8") as fh:
        config = RankerConfig(**json.load(fh))
    model = RankerModel(config, catalog, embedder)
    state = load_checkpoint(path)
    params = model.named_params()
    if set(state) != set(params):
        raise ValueError("checkpoint does not match model architecture")
    for name, tensor in params.items():
        if state[name].shape != tensor.data.shape:
            raise ValueError(f"shape mismatch for {name}")
        tensor.data = state[name]
    return model


# ---------------------------------------------------------------------------
# Metrics, baseline, evaluation
# ---------------------------------------------------------------------------

def ndcg_at_k(ranked: list[str], relevant: set[str], k: int) -> float:
    """Binary-gain NDCG with log2(position+1) discount; 0 if nothing relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        return 0.0
    dcg = sum(1.0 / math.log2(pos + 1)
              for pos, item in enumerate(ranked[:k], start=1) if item in relevant)
    ideal_hits = min(k, len(relevant))
    idcg = sum(1.0 / math.log2(pos + 1) for pos in range(1, ideal_hits + 1))
    return dcg / idcg


@dataclass
class PersonaAffinity:
    """Fixed mapping from item category to persona score dimensions."""
    category_dims: dict[str, list[int]]

    def affinity(self, persona: np.ndarray, category: str) -> float:
        dims = self.category_dims.get(category)
        if not dims:
            return float(persona.mean())
        return float(np.mean([persona[d] for d in dims]))


def heuristic_baseline_rank(
    cart: CartState,
    candidates: list[ScoredCandidate],
    persona: np.ndarray,
    catalog: Catalog,
    affinity: PersonaAffinity,
) -> list[str]:
    """Context-free production-style ranking: persona affinity of the
    candidate's category times the distinct-item count of its anchor PT
    in the cart."""
    pt_counts: dict[str, int] = {}
    for item_id in set(cart.item_ids()):
        if item_id in catalog:
            pt = catalog.pt_of(item_id)
            pt_counts[pt] = pt_counts.get(pt, 0) + 1

    weighted = []
    for cand in candidates:
        item = catalog.get(cand.item_id)
        category = item.category if item else ""
        anchor_pt = (catalog.pt_of(cand.anchor_item_id)
                     if cand.anchor_item_id in catalog else cand.anchor_item_id)
        weight = affinity.affinity(persona, category) * pt_counts.get(anchor_pt, 0)
        weighted.append((cand.item_id, weight))
    weighted.sort(key=lambda t: (-t[1], t[0]))
    return [item_id for item_id, _ in weighted]


@dataclass
class EvalRow:
    bucket: str
    n: int
    model_ndcg: dict[int, float]
    baseline_ndcg: dict[int, float]

    def lift_pct(self, k: int) -> float:
        base = self.baseline_ndcg[k]
        if base == 0:
            return 0.0
        return (self.model_ndcg[k] - base) / base * 100.0


@dataclass
class EvalReport:
    ks: list[int]
    overall: EvalRow
    by_cart_size: list[EvalRow]

    def to_text(self) -> str:
        lines = []
        header = f"{'bucket':<10}{'n':>6}" + "".join(
            f"{f'model@{k}':>12}{f'base@{k}':>12}{f'lift%@{k}':>12}" for k in self.ks
        )
        lines.append(header)
        for row in [self.overall] + self.by_cart_size:
            cells = f"{row.bucket:<10}{row.n:>6}"
            for k in self.ks:
                cells += (f"{row.model_ndcg[k]:>12.4f}{row.baseline_ndcg[k]:>12.4f}"
                          f"{row.lift_pct(k):>12.2f}")
            lines.append(cells)
        return "\n".join(lines)


def rank_with_model(model: RankerModel, ex: TrainingExample) -> list[str]:
    pool = sorted(ex.positives | ex.negatives)
    scores = model.score_batch(ex.cart, pool).data
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], pool[i]))
    return [pool[i] for i in order]


def evaluate(
    model: RankerModel,
    baseline,  # callable (TrainingExample) -> ranked item list
    test_examples: list[TrainingExample],
    ks: list[int] = (2, 4, 6),
) -> EvalReport:
    """Mean NDCG@k for model and baseline, overall and by cart-size bucket."""
    if not test_examples:
        raise EmptyTestSet("no test examples")
    ks = list(ks)
    rows: dict[str, list[tuple[dict[int, float], dict[int, float]]]] = {b: [] for b, _, _ in CART_BUCKETS}
    all_pairs = []
    for ex in test_examples:
        model_rank = rank_with_model(model, ex)
        base_rank = baseline(ex)
        rel = set(ex.positives)
        pair = ({k: ndcg_at_k(model_rank, rel, k) for k in ks},
                {k: ndcg_at_k(base_rank, rel, k) for k in ks})
        all_pairs.append(pair)
        size = len(ex.cart.entries)
        for bucket, lo, hi in CART_BUCKETS:
            if lo <= size <= hi:
                rows[bucket].append(pair)
                break

    def make_row(bucket: str, pairs) -> EvalRow:
        if not pairs:
            return EvalRow(bucket, 0, {k: 0.0 for k in ks}, {k: 0.0 for k in ks})
        return EvalRow(
            bucket, len(pairs),
            {k: float(np.mean([p[0][k] for p in pairs])) for k in ks},
            {k: float(np.mean([p[1][k] for p in pairs])) for k in ks},
        )

    return EvalReport(
        ks=ks,
        overall=make_row("overall", all_pairs),
        by_cart_size=[make_row(b, rows[b]) for b, _, _ in CART_BUCKETS],
    )
