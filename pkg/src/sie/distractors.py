"""Distractor pool derivation and two-stage relation/triple filtering.

The pool is the exact set difference seed minus support. Stage one keeps the
top-k relations by semantic score against the question; stage two ranks the
surviving triples the same way. Scoring backends: a deterministic lexical
scorer (default, keeps builds reproducible offline) and a remote reranker
client speaking a small JSON protocol, for plugging in a cross-encoder
service. Ties always break by canonical id order so output never depends on
candidate presentation order.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Sequence

import httpx

from .kg import KnowledgeGraph, Triple
from .paths import Role, Subgraph

_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_NON_ALNUM_RE = re.compile(r"[^0-9A-Za-z]+")


class ScorerError(RuntimeError):
    """Remote scoring failed; carries transport detail."""


@dataclass(frozen=True)
class ScoredCandidate:
    text: str
    payload: object
    score: float


@dataclass(frozen=True)
class RemoteConfig:
    url: str
    timeout_s: float = 10.0
    retries: int = 2
    lexical_fallback: bool = False
    # Injection point for tests (httpx.MockTransport); None uses the network.
    transport: httpx.BaseTransport | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ScorerSpec:
    kind: str = "lexical"  # "lexical" | "remote"
    remote: RemoteConfig | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("lexical", "remote"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "remote" and self.remote is None:
            raise ValueError("remote scorer requires a RemoteConfig")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; splits on punctuation and camelCase."""
    out: list[str] = []
    for chunk in _NON_ALNUM_RE.split(text):
        if not chunk:
            continue
        for tok in _CAMEL_RE.split(chunk):
            out.append(tok.lower())
    return out


def lexical_score(query: str, candidate: str) -> float:
    """Cosine similarity of L2-normalized term-frequency vectors in [0, 1]."""
    q_tokens = tokenize(query)
    c_tokens = tokenize(candidate)
    if not q_tokens or not c_tokens:
        return 0.0
    q_tf: dict[str, int] = {}
    for tok in q_tokens:
        q_tf[tok] = q_tf.get(tok, 0) + 1
    c_tf: dict[str, int] = {}
    for tok in c_tokens:
        c_tf[tok] = c_tf.get(tok, 0) + 1
    dot = sum(n * c_tf[tok] for tok, n in q_tf.items() if tok in c_tf)
    if dot == 0:
        return 0.0
    q_norm = math.sqrt(sum(n * n for n in q_tf.values()))
    c_norm = math.sqrt(sum(n * n for n in c_tf.values()))
    return dot / (q_norm * c_norm)


def score_candidates(query: str, candidates: Sequence[str], scorer: ScorerSpec) -> list[float]:
    """Score every candidate against the query with the configured backend."""
    if scorer.kind == "lexical":
        return [lexical_score(query, c) for c in candidates]
    assert scorer.remote is not None
    try:
        return _remote_scores(query, candidates, scorer.remote)
    except ScorerError:
        if scorer.remote.lexical_fallback:
            return [lexical_score(query, c) for c in candidates]
        raise


def _remote_scores(query: str, candidates: Sequence[str], cfg: RemoteConfig) -> list[float]:
    if not candidates:
        return []
    payload = {"query": query, "candidates": list(candidates)}
    last_error: Exception | None = None
    with httpx.Client(transport=cfg.transport, timeout=cfg.timeout_s) as client:
        for attempt in range(cfg.retries + 1):
            try:
                resp = client.post(cfg.url.rstrip("/") + "/rerank", json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt < cfg.retries:
                    time.sleep(min(0.1 * 2**attempt, 2.0))
                continue
            if resp.status_code != 200:
                raise ScorerError(
                    f"reranker returned HTTP {resp.status_code}: {resp.text[:200]}"
                )
            try:
                scores = resp.json()["scores"]
            except (ValueError, KeyError) as exc:
                raise ScorerError(f"malformed reranker response: {exc}") from exc
            if not isinstance(scores, list) or len(scores) != len(candidates):
                raise ScorerError(
                    f"reranker score count mismatch: {len(candidates)} candidates, "
                    f"{len(scores) if isinstance(scores, list) else 'non-list'} scores"
                )
            return [float(s) for s in scores]
    raise ScorerError(f"reranker unreachable after {cfg.retries + 1} attempts: {last_error}")


def verbalize_triple(t: Triple, g: KnowledgeGraph) -> str:
    """Render as ``(head, relation, tail)`` with surfaces verbatim."""
    head, rel, tail = g.surface(t)
    return f"({head}, {rel}, {tail})"


def parse_verbalized(s: str) -> tuple[str, str, str] | None:
    """Inverse of verbalize_triple when surfaces contain no ', ' sequence."""
    if not (s.startswith("(") and s.endswith(")")):
        return None
    parts = s[1:-1].split(", ")
    if len(parts) != 3:
        return None
    return (parts[0], parts[1], parts[2])


def distractor_pool(seed: Subgraph, support: Subgraph) -> Subgraph:
    """Seed minus support, canonical order."""
    return seed.difference(support, Role.DISTRACTOR)


def filter_relations(
    pool: Subgraph, question: str, g: KnowledgeGraph, scorer: ScorerSpec, keep_k: int
) -> set[int]:
    """Top keep_k distinct pool relations by score against the question."""
    if keep_k < 1:
        raise ValueError(f"keep_k must be >= 1, got {keep_k}")
    rel_ids = sorted({t.relation for t in pool})
    if not rel_ids:
        return set()
    surfaces = [g.resolve_relation(r) for r in rel_ids]
    scores = score_candidates(question, surfaces, scorer)
    ranked = sorted(zip(rel_ids, scores), key=lambda p: (-p[1], p[0]))
    return {r for r, _ in ranked[:keep_k]}


def rank_triples(
    pool: Subgraph, question: str, g: KnowledgeGraph, rel_retain: set[int], scorer: ScorerSpec
) -> list[ScoredCandidate]:
    """Pool triples with retained relations, ranked best-first.

    Ordering: score descending, then canonical triple order. This full
    ranking is what the environment builder consumes when topping up
    distractors to a fixed context size.
    """
    kept = [t for t in pool if t.relation in rel_retain]
    if not kept:
        return []
    texts = [verbalize_triple(t, g) for t in kept]
    scores = score_candidates(question, texts, scorer)
    order = sorted(range(len(kept)), key=lambda i: (-scores[i], kept[i]))
    return [ScoredCandidate(text=texts[i], payload=kept[i], score=scores[i]) for i in order]


def filter_triples(
    pool: Subgraph,
    question: str,
    g: KnowledgeGraph,
    rel_retain: set[int],
    scorer: ScorerSpec,
    keep_m: int,
) -> Subgraph:
    """Top keep_m ranked triples as the distractor subgraph, canonical order."""
    if keep_m < 0:
        raise ValueError(f"keep_m must be >= 0, got {keep_m}")
    ranked = rank_triples(pool, question, g, rel_retain, scorer)
    return Subgraph.from_triples((c.payload for c in ranked[:keep_m]), Role.DISTRACTOR)
