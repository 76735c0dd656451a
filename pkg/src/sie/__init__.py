"""Structured in-context environments: build, serve, and score KG-grounded QA tasks."""

from .kg import Direction, KnowledgeGraph, LoadReport, Triple, load_triples
from .paths import (
    Answer,
    QAInstance,
    Role,
    Subgraph,
    extract_support,
    load_qa_jsonl,
    multi_hop_search,
    seed_subgraph,
)
from .distractors import (
    RemoteConfig,
    ScoredCandidate,
    ScorerError,
    ScorerSpec,
    distractor_pool,
    filter_relations,
    filter_triples,
    lexical_score,
    rank_triples,
    verbalize_triple,
)
from .builder import (
    BuildConfig,
    DEFAULT_RATIOS,
    DEFAULT_TEMPLATE,
    PromptTemplate,
    SIEInstance,
    build_instance,
    build_question,
    derive_seed,
    estimate_tokens,
    render_prompt,
    retain,
    retention_count,
    round_half_up,
    serialize_dataset,
)
from .rewards import (
    DEFAULT_FORMAT_WEIGHT,
    ParsedResponse,
    RewardBreakdown,
    answer_reward,
    format_reward,
    normalize,
    parse_response,
    total_reward,
)
from .grpo import (
    GrpoConfig,
    GrpoResult,
    RolloutGroup,
    clipped_term,
    group_advantages,
    grpo_objective,
    kl_term,
    ratios_from_logprobs,
)
from .service import DatasetCatalog, EpisodeRecord, ServiceConfig, create_app, replay, serve

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "BuildConfig",
    "DEFAULT_FORMAT_WEIGHT",
    "DEFAULT_RATIOS",
    "DEFAULT_TEMPLATE",
    "DatasetCatalog",
    "Direction",
    "EpisodeRecord",
    "GrpoConfig",
    "GrpoResult",
    "KnowledgeGraph",
    "LoadReport",
    "ParsedResponse",
    "PromptTemplate",
    "QAInstance",
    "RemoteConfig",
    "RewardBreakdown",
    "Role",
    "RolloutGroup",
    "SIEInstance",
    "ScoredCandidate",
    "ScorerError",
    "ScorerSpec",
    "ServiceConfig",
    "Subgraph",
    "Triple",
    "answer_reward",
    "build_instance",
    "build_question",
    "clipped_term",
    "create_app",
    "derive_seed",
    "distractor_pool",
    "estimate_tokens",
    "extract_support",
    "filter_relations",
    "filter_triples",
    "format_reward",
    "group_advantages",
    "grpo_objective",
    "kl_term",
    "lexical_score",
    "load_qa_jsonl",
    "load_triples",
    "multi_hop_search",
    "normalize",
    "parse_response",
    "rank_triples",
    "ratios_from_logprobs",
    "render_prompt",
    "replay",
    "retain",
    "retention_count",
    "round_half_up",
    "seed_subgraph",
    "serialize_dataset",
    "serve",
    "total_reward",
    "verbalize_triple",
]
