"""Rule-based reward verification for think/answer formatted responses.

Scoring is exact match after a light normalization pass; no aliasing, no
fuzzy credit. The format reward is additive and granted purely for
producing the think-then-answer structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Structure: a think block, optional whitespace, then an answer block.
# Text before and after the pair is tolerated.
_STRUCTURE_RE = re.compile(r"<think>.*?</think>\s*<answer>.*?</answer>", re.DOTALL)
_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)

DEFAULT_FORMAT_WEIGHT = 0.1


@dataclass(frozen=True)
class ParsedResponse:
    think: str | None
    answer: str | None
    well_formed: bool


@dataclass(frozen=True)
class RewardBreakdown:
    answer_reward: float
    format_reward: float
    total: float


def parse_response(text: str) -> ParsedResponse:
    """Extract think/answer contents; never raises.

    well_formed requires a think block followed (up to whitespace) by an
    answer block. When several blocks exist the last one wins: the final
    committed answer is the one scored. Contents are returned verbatim.
    """
    thinks = _THINK_RE.findall(text)
    answers = _ANSWER_RE.findall(text)
    return ParsedResponse(
        think=thinks[-1] if thinks else None,
        answer=answers[-1] if answers else None,
        well_formed=_STRUCTURE_RE.search(text) is not None,
    )


def normalize(s: str) -> str:
    """Casefold, collapse whitespace runs, drop trailing periods.

    Stripping the whole trailing run of periods (not just one) keeps the
    function idempotent, which matching relies on.
    """
    return " ".join(s.casefold().split()).rstrip(" .")


def answer_reward(parsed: ParsedResponse, gold: list[str]) -> float:
    """Exactly 1.0 on a normalized exact match against any gold answer."""
    if not gold:
        raise ValueError("gold answer list must be non-empty")
    if not parsed.well_formed or parsed.answer is None:
        return 0.0
    got = normalize(parsed.answer)
    return 1.0 if any(got == normalize(g) for g in gold) else 0.0


def format_reward(parsed: ParsedResponse, weight: float = DEFAULT_FORMAT_WEIGHT) -> float:
    if weight < 0:
        raise ValueError(f"format weight must be >= 0, got {weight}")
    return weight if parsed.well_formed else 0.0


def total_reward(
    response: str, gold: list[str], weight: float = DEFAULT_FORMAT_WEIGHT
) -> RewardBreakdown:
    parsed = parse_response(response)
    a = answer_reward(parsed, gold)
    f = format_reward(parsed, weight)
    return RewardBreakdown(answer_reward=a, format_reward=f, total=a + f)
