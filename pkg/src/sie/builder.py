"""Assembly of partial environment instances at fixed retention ratios.

One question becomes one instance per ratio. The 100% variant is sized
first: full support plus as many ranked distractors as fit the prompt
token budget. That count becomes the target context size for every other
ratio of the same question, so shrinking the support tops up distractors
in rank order and the context length stays constant in triple count.
Retention sampling and the final shuffle are driven by a per-(question,
ratio) seed derived from the master seed, so builds are reproducible
instance by instance without any global RNG sequencing.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from hashlib import blake2b
from typing import Callable, Iterable, Iterator, Sequence, TextIO

from .distractors import (
    ScoredCandidate,
    ScorerSpec,
    distractor_pool,
    filter_relations,
    rank_triples,
    verbalize_triple,
)
from .kg import KnowledgeGraph
from .paths import QAInstance, Role, Subgraph, extract_support, seed_subgraph

DEFAULT_RATIOS = (100, 75, 50, 25, 0)

DEFAULT_TEMPLATE = (
    "You are given a list of knowledge graph triples and a question. Use the\n"
    "triples to answer the question. First think step by step within <think>\n"
    "and </think> tags, then give only the final answer within <answer> and\n"
    "</answer> tags.\n"
    "\n"
    "Triples:\n"
    "{triples}\n"
    "\n"
    "Question: {question}\n"
)

_PLACEHOLDER_RE = re.compile(r"\{question\}|\{triples\}")


def estimate_tokens(text: str) -> int:
    """Heuristic token count: ceil(chars / 4)."""
    return (len(text) + 3) // 4


# Estimators are looked up by name so configs stay serializable; register a
# real tokenizer here to replace the character heuristic.
TOKEN_ESTIMATORS: dict[str, Callable[[str], int]] = {"chars4": estimate_tokens}


def round_half_up(x: Fraction) -> int:
    """Exact half-up rounding; never trusts binary float midpoints."""
    return math.floor(x + Fraction(1, 2))


def _canon_ratio(ratio: float) -> int | float:
    if isinstance(ratio, float) and ratio.is_integer():
        return int(ratio)
    return ratio


def retention_count(total: int, ratio: float) -> int:
    """round_half_up(ratio/100 * total) with exact rational arithmetic."""
    if not 0 <= ratio <= 100:
        raise ValueError(f"ratio must be in [0, 100], got {ratio}")
    return round_half_up(Fraction(str(_canon_ratio(ratio))) * total / 100)


def derive_seed(master_seed: int, instance_id: str, ratio: float) -> int:
    """Stable 64-bit per-(question, ratio) seed from the master seed."""
    key = f"{master_seed}|{instance_id}|{_canon_ratio(ratio)}"
    return int.from_bytes(blake2b(key.encode("utf-8"), digest_size=8).digest(), "big")


def retain(support: Subgraph, ratio: float, rng_seed: int) -> Subgraph:
    """Uniform sample without replacement of retention_count(|support|, ratio).

    Ratio 100 keeps everything, 0 keeps nothing; same inputs give the
    same subset.
    """
    count = retention_count(len(support), ratio)
    picked = random.Random(rng_seed).sample(list(support), count)
    return Subgraph.from_triples(picked, Role.SUPPORT)


@dataclass(frozen=True)
class PromptTemplate:
    text: str

    def __post_init__(self) -> None:
        for ph in ("{question}", "{triples}"):
            if ph not in self.text:
                raise ValueError(f"prompt template missing {ph} placeholder")

    def render(self, question: str, triples: Sequence[str]) -> str:
        joined = "\n".join(triples)
        # Single-pass substitution: braces coming from the question or the
        # triples can never be re-expanded.
        return _PLACEHOLDER_RE.sub(
            lambda m: question if m.group(0) == "{question}" else joined, self.text
        )


def load_template(path: str) -> PromptTemplate:
    with open(path, "r", encoding="utf-8") as fh:
        return PromptTemplate(fh.read())


@dataclass(frozen=True)
class BuildConfig:
    ratios: tuple = DEFAULT_RATIOS
    prompt_budget_tokens: int = 8192
    keep_k: int = 20
    master_seed: int = 0
    n_hop_override: int | None = None
    directed: bool = False
    scorer: ScorerSpec = field(default_factory=ScorerSpec)
    template: PromptTemplate = field(default_factory=lambda: PromptTemplate(DEFAULT_TEMPLATE))
    estimator_kind: str = "chars4"

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratios", tuple(_canon_ratio(r) for r in self.ratios))
        for r in self.ratios:
            if not 0 <= r <= 100:
                raise ValueError(f"ratio must be in [0, 100], got {r}")
        if self.prompt_budget_tokens < 1:
            raise ValueError("prompt_budget_tokens must be positive")
        if self.estimator_kind not in TOKEN_ESTIMATORS:
            raise ValueError(f"unknown token estimator {self.estimator_kind!r}")

    @property
    def estimator(self) -> Callable[[str], int]:
        return TOKEN_ESTIMATORS[self.estimator_kind]


@dataclass(frozen=True)
class SIEInstance:
    """One built environment record: a question with its shuffled context."""

    id: str
    ratio: float
    question: str
    context: tuple[str, ...]
    gold_answers: tuple[str, ...]
    rng_seed: int
    n_support_total: int
    n_support_kept: int
    n_distract: int
    token_estimate: int
    under_budget: bool

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "ratio": self.ratio,
            "question": self.question,
            "context": list(self.context),
            "gold_answers": list(self.gold_answers),
            "rng_seed": self.rng_seed,
            "meta": {
                "n_support_total": self.n_support_total,
                "n_support_kept": self.n_support_kept,
                "n_distract": self.n_distract,
                "token_estimate": self.token_estimate,
                "under_budget": self.under_budget,
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SIEInstance":
        meta = obj["meta"]
        return cls(
            id=obj["id"],
            ratio=obj["ratio"],
            question=obj["question"],
            context=tuple(obj["context"]),
            gold_answers=tuple(obj["gold_answers"]),
            rng_seed=obj["rng_seed"],
            n_support_total=meta["n_support_total"],
            n_support_kept=meta["n_support_kept"],
            n_distract=meta["n_distract"],
            token_estimate=meta["token_estimate"],
            under_budget=meta["under_budget"],
        )


def render_prompt(inst: SIEInstance, template: PromptTemplate | None = None) -> str:
    tpl = template if template is not None else PromptTemplate(DEFAULT_TEMPLATE)
    return tpl.render(inst.question, inst.context)


def size_context(
    question: str,
    support_lines: Sequence[str],
    ranked_lines: Sequence[str],
    cfg: BuildConfig,
) -> int:
    """Largest distractor count whose full-support prompt fits the budget.

    Token estimate is monotone in the distractor prefix length, so binary
    search finds the cut in O(log n) renders.
    """
    estimate = cfg.estimator

    def fits(d: int) -> bool:
        lines = list(support_lines) + list(ranked_lines[:d])
        return estimate(cfg.template.render(question, lines)) <= cfg.prompt_budget_tokens

    lo, hi = 0, len(ranked_lines)
    if not fits(lo):
        return 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def build_instance(
    inst: QAInstance,
    support: Subgraph,
    distractor_ranked: Sequence[ScoredCandidate],
    ratio: float,
    cfg: BuildConfig,
    g: KnowledgeGraph,
    target_size: int | None = None,
) -> SIEInstance:
    """One ratio variant: retained support plus rank-order distractor top-up.

    target_size defaults to this instance's own 100% context size. The
    context is shuffled with a seeded Fisher-Yates permutation; the record
    is flagged under_budget instead of aborting when the distractor pool
    cannot reach the target size or the prompt overruns the budget.
    """
    ratio = _canon_ratio(ratio)
    support_lines = [verbalize_triple(t, g) for t in support]
    if target_size is None:
        n100 = size_context(inst.question, support_lines, [c.text for c in distractor_ranked], cfg)
        target_size = len(support) + n100

    rng_seed = derive_seed(cfg.master_seed, inst.id, ratio)
    rng = random.Random(rng_seed)

    n_total = len(support)
    n_keep = retention_count(n_total, ratio)
    # First draw from a fresh stream, so the subset matches standalone
    # retain() with the same seed.
    kept = rng.sample(list(support), n_keep)

    n_distract = max(target_size - n_keep, 0)
    chosen = list(distractor_ranked[:n_distract])
    under = len(chosen) < n_distract

    context = [verbalize_triple(t, g) for t in kept] + [c.text for c in chosen]
    rng.shuffle(context)

    prompt = cfg.template.render(inst.question, context)
    token_estimate = cfg.estimator(prompt)
    if token_estimate > cfg.prompt_budget_tokens:
        under = True

    return SIEInstance(
        id=f"{inst.id}@{ratio}",
        ratio=ratio,
        question=inst.question,
        context=tuple(context),
        gold_answers=tuple(inst.gold_answers),
        rng_seed=rng_seed,
        n_support_total=n_total,
        n_support_kept=n_keep,
        n_distract=len(chosen),
        token_estimate=token_estimate,
        under_budget=under,
    )


def build_question(g: KnowledgeGraph, inst: QAInstance, cfg: BuildConfig) -> list[SIEInstance]:
    """Full pipeline for one question: retrieve, extract, filter, assemble.

    Returns one instance per configured ratio, in config order. Pure given
    a lexical scorer, so questions can be fanned out across workers.
    """
    n_hop = cfg.n_hop_override if cfg.n_hop_override is not None else inst.n_hop
    seed = seed_subgraph(g, inst, hops=n_hop, directed=cfg.directed)
    e_q = list(inst.question_entities)
    e_a = inst.linked_answer_entities(top_k=10)
    support = extract_support(seed, e_q, e_a, n_hop, directed=cfg.directed)

    pool = distractor_pool(seed, support)
    rel_retain = filter_relations(pool, inst.question, g, cfg.scorer, cfg.keep_k)
    ranked = rank_triples(pool, inst.question, g, rel_retain, cfg.scorer)

    support_lines = [verbalize_triple(t, g) for t in support]
    n100 = size_context(inst.question, support_lines, [c.text for c in ranked], cfg)
    target = len(support) + n100

    return [
        build_instance(inst, support, ranked, ratio, cfg, g, target_size=target)
        for ratio in cfg.ratios
    ]


def serialize_instance(inst: SIEInstance) -> str:
    """Canonical single-line JSON: fixed key order, compact separators."""
    return json.dumps(inst.to_json_dict(), ensure_ascii=False, separators=(",", ":"))


def serialize_dataset(instances: Iterable[SIEInstance], sink: str | TextIO) -> int:
    """Write one canonical JSON object per line; returns the count written."""
    fh: TextIO
    own = isinstance(sink, (str, bytes))
    fh = open(sink, "w", encoding="utf-8", newline="\n") if own else sink  # type: ignore[arg-type]
    count = 0
    try:
        for inst in instances:
            try:
                fh.write(serialize_instance(inst) + "\n")
            except OSError as exc:
                raise OSError(f"failed writing instance {inst.id}: {exc}") from exc
            count += 1
    finally:
        if own:
            fh.close()
    return count


def read_dataset(source: str | TextIO) -> Iterator[SIEInstance]:
    own = isinstance(source, (str, bytes))
    fh = open(source, "r", encoding="utf-8") if own else source  # type: ignore[arg-type]
    try:
        for line in fh:
            line = line.strip()
            if line:
                yield SIEInstance.from_json_dict(json.loads(line))
    finally:
        if own:
            fh.close()
