"""Group-relative policy optimization math over caller-supplied numbers.

Only the arithmetic lives here: rewards and likelihood ratios come from the
trainer, advantages and the clipped objective go back. Sums are plain
sequential float64 accumulation (no pairwise or compensated summation) so
any client runtime with IEEE doubles can reproduce results bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

DEFAULT_CLIP_EPSILON = 0.2
DEFAULT_KL_COEFF = 0.01
DEFAULT_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class GrpoConfig:
    clip_epsilon: float = DEFAULT_CLIP_EPSILON
    kl_coeff: float = DEFAULT_KL_COEFF
    std_floor: float = DEFAULT_STD_FLOOR

    def __post_init__(self) -> None:
        if self.clip_epsilon <= 0:
            raise ValueError(f"clip_epsilon must be > 0, got {self.clip_epsilon}")
        if self.kl_coeff < 0:
            raise ValueError(f"kl_coeff must be >= 0, got {self.kl_coeff}")
        if self.std_floor <= 0:
            raise ValueError(f"std_floor must be > 0, got {self.std_floor}")

    def to_json_dict(self) -> dict:
        return {
            "clip_epsilon": self.clip_epsilon,
            "kl_coeff": self.kl_coeff,
            "std_floor": self.std_floor,
        }


@dataclass(frozen=True)
class RolloutGroup:
    rewards: tuple[float, ...]
    ratios_new_over_old: tuple[float, ...] | None = None
    ratios_ref_over_new: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        if not self.rewards:
            raise ValueError("rollout group must contain at least one reward")
        for name in ("ratios_new_over_old", "ratios_ref_over_new"):
            ratios = getattr(self, name)
            if ratios is None:
                continue
            ratios = tuple(float(r) for r in ratios)
            object.__setattr__(self, name, ratios)
            if len(ratios) != len(self.rewards):
                raise ValueError(
                    f"{name} has {len(ratios)} entries for {len(self.rewards)} rewards"
                )
            for r in ratios:
                if not r > 0:
                    raise ValueError(f"{name} must be strictly positive, got {r}")

    @property
    def size(self) -> int:
        return len(self.rewards)


def group_advantages(rewards: Sequence[float], std_floor: float = DEFAULT_STD_FLOOR) -> list[float]:
    """(r_i - mean) / max(population std, std_floor); all-equal groups -> zeros."""
    if not rewards:
        raise ValueError("rewards must be non-empty")
    if std_floor <= 0:
        raise ValueError(f"std_floor must be > 0, got {std_floor}")
    n = len(rewards)
    first = rewards[0]
    if all(r == first for r in rewards):
        # All-equal groups must give exact zeros; the mean subtraction
        # below can leave one-ulp residue that the floor would amplify.
        return [0.0] * n
    total = 0.0
    for r in rewards:
        total += r
    mean = total / n
    sq = 0.0
    for r in rewards:
        d = r - mean
        sq += d * d
    std = math.sqrt(sq / n)
    denom = std if std > std_floor else std_floor
    return [(r - mean) / denom for r in rewards]


def kl_term(ratio_ref_over_new: float) -> float:
    """Unbiased KL estimator r - ln(r) - 1; nonnegative, zero only at r = 1."""
    if not ratio_ref_over_new > 0:
        raise ValueError(f"ratio must be > 0, got {ratio_ref_over_new}")
    return ratio_ref_over_new - math.log(ratio_ref_over_new) - 1.0


def clipped_term(ratio_new_over_old: float, advantage: float, clip_epsilon: float) -> float:
    """min(r*A, clip(r, 1-eps, 1+eps)*A), the pessimistic surrogate."""
    if not ratio_new_over_old > 0:
        raise ValueError(f"ratio must be > 0, got {ratio_new_over_old}")
    if clip_epsilon <= 0:
        raise ValueError(f"clip_epsilon must be > 0, got {clip_epsilon}")
    clipped = min(max(ratio_new_over_old, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
    return min(ratio_new_over_old * advantage, clipped * advantage)


@dataclass(frozen=True)
class PerResponse:
    advantage: float
    clipped: float
    kl: float

    def to_json_dict(self) -> dict:
        return {"advantage": self.advantage, "clipped": self.clipped, "kl": self.kl}


@dataclass(frozen=True)
class GrpoResult:
    objective: float
    per_response: tuple[PerResponse, ...]
    config: GrpoConfig

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective,
            "per_response": [p.to_json_dict() for p in self.per_response],
            "config": self.config.to_json_dict(),
        }


def grpo_objective(group: RolloutGroup, cfg: GrpoConfig | None = None) -> GrpoResult:
    """(1/G) sum_i [clipped_term(r_i, A_i, eps) - beta * kl_term(ref_r_i)]."""
    cfg = cfg if cfg is not None else GrpoConfig()
    if group.ratios_new_over_old is None or group.ratios_ref_over_new is None:
        raise ValueError("grpo_objective requires both ratio lists")
    advantages = group_advantages(group.rewards, cfg.std_floor)
    per: list[PerResponse] = []
    total = 0.0
    for a, r_new, r_ref in zip(advantages, group.ratios_new_over_old, group.ratios_ref_over_new):
        c = clipped_term(r_new, a, cfg.clip_epsilon)
        k = kl_term(r_ref)
        per.append(PerResponse(advantage=a, clipped=c, kl=k))
        total += c - cfg.kl_coeff * k
    return GrpoResult(objective=total / group.size, per_response=tuple(per), config=cfg)


def ratios_from_logprobs(logp_num: Sequence[float], logp_den: Sequence[float]) -> list[float]:
    """exp(a - b) elementwise, for trainers that hold log-probabilities."""
    if len(logp_num) != len(logp_den):
        raise ValueError(f"length mismatch: {len(logp_num)} vs {len(logp_den)}")
    return [math.exp(a - b) for a, b in zip(logp_num, logp_den)]
