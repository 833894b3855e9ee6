"""Agentic LLM candidate pipeline: theme generation, theme-conditioned
recommendations, generation-quality filtering, the naive baseline generator,
and the PT-level judge.

All agents run against a pluggable ChatClient. FixtureChatClient replays
recorded transcripts keyed by a content hash of the prompt; ScriptedChatClient
deterministically synthesizes plausible replies so desk-scale runs never need
a live endpoint; HttpChatClient speaks the usual chat-completion wire format.
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import os
import re
import threading
from dataclasses import dataclass

from . import prompts
from .catalog import ItemRecord
from .errors import LengthMismatch, LlmMalformedOutput, LlmTransport

log = logging.getLogger(__name__)

PARSE_RETRIES = 2  # retries after the first malformed reply


# ---------------------------------------------------------------------------
# Chat clients
# ---------------------------------------------------------------------------

class ChatClient:
    """Interface: complete(prompt, temperature, seed) -> reply text."""

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        raise NotImplementedError


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class FixtureChatClient(ChatClient):
    """Replays recorded transcripts from fixtures/<sha256-of-prompt>.txt.

    Read-only and fully deterministic. With a fallback client, missing
    fixtures are generated once and recorded for later replay.
    """

    def __init__(self, fixture_dir: str, fallback: ChatClient | None = None):
        self.fixture_dir = fixture_dir
        self.fallback = fallback

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        path = os.path.join(self.fixture_dir, prompt_hash(prompt) + ".txt")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                return fh.read()
        if self.fallback is None:
            raise LlmTransport(f"no fixture for prompt hash {prompt_hash(prompt)}")
        reply = self.fallback.complete(prompt, temperature, seed)
        os.makedirs(self.fixture_dir, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(reply)
        return reply


class HttpChatClient(ChatClient):
    """POSTs {model, messages, temperature, seed} and reads
    choices[0].message.content. URL/key come from arguments or the
    XP_LLM_URL / XP_LLM_KEY environment variables."""

    def __init__(self, url: str | None = None, api_key: str | None = None,
                 model: str = "gpt-4o", timeout: float = 60.0):
        self.url = url or os.environ.get("XP_LLM_URL", "")
        self.api_key = api_key or os.environ.get("XP_LLM_KEY", "")
        self.model = model
        self.timeout = timeout
        if not self.url:
            raise LlmTransport("no chat endpoint configured (set XP_LLM_URL)")

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "seed": seed,
        }
        try:
            resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except Exception as exc:  # noqa: BLE001 - wrap any transport failure
            raise LlmTransport(str(exc)) from exc


def _unit_hash(*parts: str) -> float:
    """Deterministic pseudo-uniform value in [0, 1) from text parts."""
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") / 2**64


_THEME_BANK = [
    "Daily Routine", "Meal Prep", "Entertaining", "Storage", "Cleaning",
    "Travel", "Family Care", "Seasonal Use", "Organization", "Quick Fixes",
]

_REC_SUFFIXES = [
    "organizer", "storage container", "serving tray", "dispenser", "holder",
    "cleaning kit", "measuring set", "caddy", "rack", "mat",
]


class ScriptedChatClient(ChatClient):
    """Deterministic template-driven responder for desk-scale runs.

    Recognizes each agent prompt by its instruction text and emits
    well-formed replies derived from a content hash, so full pipeline runs
    are reproducible without any model. An optional rec vocabulary (e.g. GM
    titles from a synthetic catalog) grounds generated rec texts so the
    downstream retrieval stage has something to match.
    """

    def __init__(self, rec_vocab: list[str] | None = None):
        self.rec_vocab = list(rec_vocab or [])

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        if "identify the top 5 most popular usage contexts" in prompt:
            return self._themes(prompt)
        if "generate 10 complementary non-grocery item recommendations" in prompt:
            return self._theme_recs(prompt)
        if "Recommend product types that are very specifically used" in prompt:
            return self._naive(prompt)
        if "TASK: Verify and score this single recommendation" in prompt:
            return self._gen_eval(prompt)
        if "Assess the quality of a cross-category recommendation" in prompt:
            return self._judge(prompt)
        raise LlmTransport("scripted client does not recognize this prompt")

    @staticmethod
    def _field(prompt: str, pattern: str) -> str:
        m = re.search(pattern, prompt)
        return m.group(1).strip() if m else ""

    def _anchor(self, prompt: str) -> str:
        return (self._field(prompt, r"Analyze the following item: (.+?) and identify")
                or self._field(prompt, r"anchor_item: (.+?)\.")
                or self._field(prompt, r"usage contexts for (.+?):"))

    def _rec_name(self, anchor: str, theme: str, i: int) -> str:
        u = _unit_hash("rec", anchor, theme, str(i))
        if self.rec_vocab:
            return self.rec_vocab[int(u * len(self.rec_vocab))]
        head = anchor.split()[0] if anchor else "item"
        return f"{head} {_REC_SUFFIXES[int(u * len(_REC_SUFFIXES))]}"

    def _themes(self, prompt: str) -> str:
        anchor = self._anchor(prompt)
        offset = int(_unit_hash("theme", anchor) * len(_THEME_BANK))
        labels = [_THEME_BANK[(offset + i) % len(_THEME_BANK)] for i in range(5)]
        entries = [f"{lab} - common {anchor} usage scenario" for lab in labels]
        return json.dumps(entries)

    def _theme_recs(self, prompt: str) -> str:
        anchor = self._anchor(prompt)
        m = re.search(r"usage contexts for .+?:\n\n(.*?)\n\nFor each context", prompt, re.S)
        contexts = []
        if m:
            for line in m.group(1).splitlines():
                line = line.strip().lstrip("0123456789. ")
                if line:
                    contexts.append(line.split(" - ")[0].strip())
        contexts = contexts[:5] or [f"Context {i}" for i in range(1, 6)]
        out = []
        for ctx in contexts:
            recs = [self._rec_name(anchor, ctx, i) for i in range(10)]
            out.append({
                "context": ctx,
                "recs": recs,
                "explanations": [f"{r} supports {anchor} during {ctx.lower()}" for r in recs],
            })
        return json.dumps(out)

    def _naive(self, prompt: str) -> str:
        anchor = self._anchor(prompt)
        m = re.search(r"A Python list of top (\d+) recommendations", prompt)
        n = int(m.group(1)) if m else 10
        recs = [self._rec_name(anchor, "naive", i) for i in range(n)]
        return json.dumps({
            "recs": recs,
            "explanation": [f"{r} pairs with {anchor}" for r in recs],
        })

    def _gen_eval(self, prompt: str) -> str:
        anchor = self._field(prompt, r"ANCHOR ITEM: (.+)")
        rec = self._field(prompt, r"RECOMMENDATION: (.+)")
        score = round(0.30 + 0.65 * _unit_hash("gen", anchor, rec), 3)
        return json.dumps({"score": score, "reasoning": f"{rec} extends {anchor} cross-category"})

    def _judge(self, prompt: str) -> str:
        a = self._field(prompt, r"Anchor Category: (.+)")
        rec = self._field(prompt, r"LLM Recommendation: (.+)")
        r = self._field(prompt, r"Matched Product Category: (.+)")
        score = round(0.35 + 0.60 * _unit_hash("judge", a, rec, r), 3)
        return json.dumps({"score": score, "reasoning": f"{rec} bridges {a} and {r}"})


# ---------------------------------------------------------------------------
# Robust reply parsing
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[a-zA-Z]*\n?|```")


def parse_reply(text: str):
    """Extract the single JSON (or Python-literal) value from a reply.

    Strips markdown fences, then scans for the first bracket/brace and
    decodes from there; leading or trailing prose is tolerated.
    """
    cleaned = _FENCE_RE.sub("", text).strip()
    for parser in (json.loads, ast.literal_eval):
        try:
            return parser(cleaned)
        except (ValueError, SyntaxError):
            pass
    start_candidates = [i for i in (cleaned.find("["), cleaned.find("{")) if i >= 0]
    if not start_candidates:
        raise LlmMalformedOutput(f"no JSON value in reply: {text[:120]!r}")
    start = min(start_candidates)
    decoder = json.JSONDecoder()
    try:
        value, _ = decoder.raw_decode(cleaned[start:])
        return value
    except ValueError:
        pass
    try:
        # Python-style literal with trailing prose: find the matching close.
        closer = "]" if cleaned[start] == "[" else "}"
        end = cleaned.rfind(closer)
        if end > start:
            return ast.literal_eval(cleaned[start:end + 1])
    except (ValueError, SyntaxError):
        pass
    raise LlmMalformedOutput(f"unparseable reply: {text[:120]!r}")


def _call_parsed(client: ChatClient, prompt: str, validate, temperature: float = 0.0, seed: int = 0):
    """Call the client, parse and validate; retry on malformed output."""
    last_err: Exception | None = None
    for _ in range(1 + PARSE_RETRIES):
        reply = client.complete(prompt, temperature=temperature, seed=seed)
        try:
            return validate(parse_reply(reply))
        except LlmMalformedOutput as exc:
            last_err = exc
            log.warning("malformed LLM output, retrying: %s", exc)
        except LengthMismatch:
            raise
    raise last_err if last_err else LlmMalformedOutput("no reply")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Theme:
    anchor_item_id: str
    label: str
    explanation: str


@dataclass
class LlmRecommendation:
    anchor_item_id: str
    theme_label: str  # empty for the naive pipeline
    rec_text: str
    explanation: str
    gen_score: float | None = None


@dataclass(frozen=True)
class JudgeScore:
    anchor_pt: str
    llm_rec: str
    rec_pt: str
    score: float
    reasoning: str


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def _anchor_text(anchor: ItemRecord) -> str:
    return f"{anchor.title}, ProductType: {anchor.product_type}"


def generate_themes(anchor: ItemRecord, client: ChatClient) -> list[Theme]:
    """Stage 1: exactly 5 usage-context themes for an OG anchor."""
    if anchor.segment != "OG":
        raise ValueError("themes are generated for OG anchors only")
    prompt = prompts.render(prompts.THEME_PROMPT, anchor_item=_anchor_text(anchor))

    def validate(value):
        if not isinstance(value, list) or len(value) != 5:
            raise LlmMalformedOutput(f"expected 5 contexts, got {value!r:.80}")
        themes = []
        for entry in value:
            if not isinstance(entry, str) or not entry.strip():
                raise LlmMalformedOutput(f"bad context entry: {entry!r}")
            label, _, explanation = entry.partition(" - ")
            themes.append(Theme(anchor.item_id, label.strip(), explanation.strip()))
        return themes

    return _call_parsed(client, prompt, validate)


def generate_theme_recs(anchor: ItemRecord, themes: list[Theme],
                        client: ChatClient) -> list[LlmRecommendation]:
    """Stage 2: up to 10 recommendations per theme (5-9 accepted with a warning)."""
    if len(themes) != 5:
        raise ValueError("expected 5 themes")
    contexts = "\n".join(
        f"{i}. {t.label} - {t.explanation}" for i, t in enumerate(themes, start=1)
    )
    prompt = prompts.render(
        prompts.THEME_REC_PROMPT,
        anchor_item=_anchor_text(anchor),
        anchor_contexts=contexts,
    )

    def validate(value):
        if not isinstance(value, list) or not value:
            raise LlmMalformedOutput("expected a list of context objects")
        recs: list[LlmRecommendation] = []
        for obj in value:
            if not isinstance(obj, dict) or "context" not in obj or "recs" not in obj:
                raise LlmMalformedOutput(f"bad context object: {obj!r:.80}")
            names = obj["recs"]
            explanations = obj.get("explanations", [])
            if not isinstance(names, list) or len(names) < 5:
                raise LlmMalformedOutput(f"too few recs for context {obj.get('context')!r}")
            if len(names) < 10:
                log.warning("context %r returned %d recs (expected 10)", obj.get("context"), len(names))
            if explanations and len(explanations) != len(names):
                raise LengthMismatch(
                    f"{len(names)} recs vs {len(explanations)} explanations "
                    f"for context {obj.get('context')!r}"
                )
            for i, name in enumerate(names):
                if not str(name).strip():
                    raise LlmMalformedOutput("empty rec text")
                recs.append(LlmRecommendation(
                    anchor_item_id=anchor.item_id,
                    theme_label=str(obj["context"]),
                    rec_text=str(name).strip(),
                    explanation=str(explanations[i]) if explanations else "",
                ))
        return recs

    return _call_parsed(client, prompt, validate)


def naive_generate(anchor: ItemRecord, client: ChatClient, n: int) -> list[LlmRecommendation]:
    """Baseline single-prompt generator (no themes)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    prompt = prompts.render(prompts.NAIVE_PROMPT, item_input=_anchor_text(anchor), n=n)

    def validate(value):
        if not isinstance(value, dict) or "recs" not in value:
            raise LlmMalformedOutput("expected object with 'recs'")
        names = value["recs"]
        if not isinstance(names, list) or not names:
            raise LlmMalformedOutput("'recs' must be a nonempty list")
        explanations = value.get("explanation", [])
        recs = []
        for i, name in enumerate(names):
            text = str(name).strip()
            inline_expl = ""
            # Some replies embed "Name: explanation" in each rec string.
            if ": " in text:
                text, _, inline_expl = text.partition(": ")
            expl = str(explanations[i]) if i < len(explanations) else inline_expl
            if not text:
                raise LlmMalformedOutput("empty rec text")
            recs.append(LlmRecommendation(anchor.item_id, "", text, expl))
        return recs

    return _call_parsed(client, prompt, validate)


def evaluate_generation(rec: LlmRecommendation, anchor: ItemRecord, client: ChatClient) -> float:
    """Stage 3: score one (anchor, rec, explanation) triplet; clamps to [0, 1]."""
    if rec.anchor_item_id != anchor.item_id:
        raise ValueError("recommendation does not belong to this anchor")
    prompt = prompts.render(
        prompts.GEN_EVALUATOR_PROMPT,
        anchor_item=_anchor_text(anchor),
        recommendation=rec.rec_text,
        explanation=rec.explanation,
    )

    def validate(value):
        if not isinstance(value, dict) or "score" not in value:
            raise LlmMalformedOutput("expected object with 'score'")
        try:
            score = float(value["score"])
        except (TypeError, ValueError) as exc:
            raise LlmMalformedOutput(f"non-numeric score: {value['score']!r}") from exc
        if not 0.0 <= score <= 1.0:
            log.warning("generation score %s out of range, clamping", score)
            score = min(1.0, max(0.0, score))
        return score

    score = _call_parsed(client, prompt, validate)
    rec.gen_score = score
    return score


def filter_generated(recs: list[LlmRecommendation], threshold: float = 0.4) -> list[LlmRecommendation]:
    """Keep recs with gen_score >= threshold; unscored recs are dropped."""
    return [r for r in recs if r.gen_score is not None and r.gen_score >= threshold]


def _norm(text: str) -> str:
    return " ".join(text.lower().split())


class JudgeCache:
    """PT-level judge memo; concurrent-safe with first-writer-wins inserts."""

    def __init__(self):
        self._lock = threading.Lock()
        self._scores: dict[tuple[str, str, str], JudgeScore] = {}
        self.client_calls = 0

    def key(self, anchor_pt: str, llm_rec: str, rec_pt: str) -> tuple[str, str, str]:
        return (_norm(anchor_pt), _norm(llm_rec), _norm(rec_pt))


def judge_retrieved(anchor_pt: str, llm_rec: str, rec_pt: str,
                    client: ChatClient, cache: JudgeCache | None = None) -> JudgeScore:
    """Score one (anchor_pt, llm_rec, rec_pt) triplet, memoized per triplet."""
    if not (anchor_pt and llm_rec and rec_pt):
        raise ValueError("anchor_pt, llm_rec and rec_pt must all be nonempty")
    key = None
    if cache is not None:
        key = cache.key(anchor_pt, llm_rec, rec_pt)
        with cache._lock:
            hit = cache._scores.get(key)
        if hit is not None:
            return hit

    prompt = prompts.render(prompts.JUDGE_PROMPT, anchor_pt=anchor_pt,
                            llm_rec=llm_rec, rec_pt=rec_pt)

    def validate(value):
        if not isinstance(value, dict) or "score" not in value:
            raise LlmMalformedOutput("expected object with 'score'")
        try:
            score = float(value["score"])
        except (TypeError, ValueError) as exc:
            raise LlmMalformedOutput(f"non-numeric score: {value['score']!r}") from exc
        score = min(1.0, max(0.0, score))
        return JudgeScore(anchor_pt, llm_rec, rec_pt, score, str(value.get("reasoning", "")))

    result = _call_parsed(client, prompt, validate)
    if cache is not None:
        with cache._lock:
            cache.client_calls += 1
            result = cache._scores.setdefault(key, result)
    return result
