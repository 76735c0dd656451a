"""HTTP service exposing built datasets, reward scoring, and group scoring.

The catalog is immutable shared state; the episode log is the only
mutation point and serializes appends behind a lock with monotone
sequence numbers. Every score is persisted before the response leaves
the server, so the log replays to the exact recorded rewards.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from glob import glob
from typing import Iterable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .builder import DEFAULT_TEMPLATE, PromptTemplate, SIEInstance, read_dataset
from .grpo import GrpoConfig, GrpoResult, RolloutGroup, group_advantages, grpo_objective
from .rewards import DEFAULT_FORMAT_WEIGHT, RewardBreakdown, total_reward


class CatalogError(RuntimeError):
    """Dataset files missing, unreadable, or colliding on instance ids."""


@dataclass(frozen=True)
class DatasetCatalog:
    instances: dict[str, SIEInstance]
    by_ratio: dict[float, tuple[str, ...]]
    datasets: dict[tuple[str, float], tuple[str, ...]]

    @classmethod
    def from_files(cls, paths: Iterable[str]) -> "DatasetCatalog":
        instances: dict[str, SIEInstance] = {}
        by_ratio: dict[float, list[str]] = {}
        datasets: dict[tuple[str, float], list[str]] = {}
        n_files = 0
        for path in paths:
            n_files += 1
            name = os.path.splitext(os.path.basename(path))[0]
            try:
                loaded = list(read_dataset(path))
            except (OSError, ValueError, KeyError) as exc:
                raise CatalogError(f"cannot load dataset {path}: {exc}") from exc
            for inst in loaded:
                if inst.id in instances:
                    raise CatalogError(f"duplicate instance id {inst.id!r} in {path}")
                instances[inst.id] = inst
                by_ratio.setdefault(float(inst.ratio), []).append(inst.id)
                datasets.setdefault((name, float(inst.ratio)), []).append(inst.id)
        if n_files == 0:
            raise CatalogError("no dataset files given")
        return cls(
            instances=instances,
            by_ratio={r: tuple(sorted(ids)) for r, ids in by_ratio.items()},
            datasets={k: tuple(sorted(ids)) for k, ids in datasets.items()},
        )

    @classmethod
    def from_dir(cls, path: str) -> "DatasetCatalog":
        files = sorted(glob(os.path.join(path, "*.jsonl")))
        if not files:
            raise CatalogError(f"no *.jsonl datasets under {path}")
        return cls.from_files(files)

    def get(self, instance_id: str) -> SIEInstance | None:
        return self.instances.get(instance_id)

    def sample(self, ratio: float | None = None, seed: int | None = None) -> SIEInstance | None:
        """Uniform over the (ratio-filtered) catalog; seeded -> deterministic."""
        if ratio is None:
            ids: tuple[str, ...] = tuple(sorted(self.instances))
        else:
            ids = self.by_ratio.get(float(ratio), ())
        if not ids:
            return None
        rng = random.Random(seed) if seed is not None else random
        return self.instances[ids[rng.randrange(len(ids))]]


@dataclass(frozen=True)
class EpisodeRecord:
    seq: int
    instance_id: str
    ratio: float
    response: str
    rewards: RewardBreakdown
    timestamp: float
    client_tag: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "seq": self.seq,
            "instance_id": self.instance_id,
            "ratio": self.ratio,
            "response": self.response,
            "rewards": {
                "answer_reward": self.rewards.answer_reward,
                "format_reward": self.rewards.format_reward,
                "total": self.rewards.total,
            },
            "timestamp": self.timestamp,
            "client_tag": self.client_tag,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EpisodeRecord":
        r = obj["rewards"]
        return cls(
            seq=obj["seq"],
            instance_id=obj["instance_id"],
            ratio=obj["ratio"],
            response=obj["response"],
            rewards=RewardBreakdown(
                answer_reward=r["answer_reward"],
                format_reward=r["format_reward"],
                total=r["total"],
            ),
            timestamp=obj["timestamp"],
            client_tag=obj.get("client_tag"),
        )


class EpisodeLog:
    """Append-only JSONL log; one writer at a time, strictly increasing seq."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._seq = self._last_seq()
        self._stats: dict[float, list[float]] = {}  # ratio -> [count, total_sum, answer_sum]

    def _last_seq(self) -> int:
        if not os.path.exists(self.path):
            return 0
        last = 0
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    last = max(last, int(json.loads(line)["seq"]))
                except (ValueError, KeyError, TypeError):
                    continue
        return last

    def append(self, instance_id: str, ratio: float, response: str, rewards: RewardBreakdown,
               client_tag: str | None = None) -> EpisodeRecord:
        with self._lock:
            self._seq += 1
            rec = EpisodeRecord(
                seq=self._seq,
                instance_id=instance_id,
                ratio=ratio,
                response=response,
                rewards=rewards,
                timestamp=time.time(),
                client_tag=client_tag,
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False,
                                    separators=(",", ":")) + "\n")
            agg = self._stats.setdefault(ratio, [0, 0.0, 0.0])
            agg[0] += 1
            agg[1] += rewards.total
            agg[2] += rewards.answer_reward
            return rec

    def stats(self) -> dict:
        with self._lock:
            per_ratio = {
                _ratio_label(ratio): {
                    "episodes": int(agg[0]),
                    "mean_total": agg[1] / agg[0],
                    "mean_answer": agg[2] / agg[0],
                }
                for ratio, agg in sorted(self._stats.items())
            }
            return {"episodes": self._seq, "per_ratio": per_ratio}


def read_episodes(path: str) -> list[EpisodeRecord]:
    records: list[EpisodeRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EpisodeRecord.from_json_dict(json.loads(line)))
    return records


def replay(log_path: str, catalog: DatasetCatalog,
           weight: float = DEFAULT_FORMAT_WEIGHT) -> list[str]:
    """Recompute every logged reward; returns mismatch descriptions (empty = clean)."""
    problems: list[str] = []
    for rec in read_episodes(log_path):
        inst = catalog.get(rec.instance_id)
        if inst is None:
            problems.append(f"seq {rec.seq}: unknown instance {rec.instance_id!r}")
            continue
        fresh = total_reward(rec.response, list(inst.gold_answers), weight)
        if fresh != rec.rewards:
            problems.append(
                f"seq {rec.seq}: recorded {rec.rewards} != recomputed {fresh}"
            )
    return problems


@dataclass(frozen=True)
class ServiceConfig:
    bind: str = "127.0.0.1:8000"
    log_path: str = "episodes.jsonl"
    format_weight: float = DEFAULT_FORMAT_WEIGHT
    template: PromptTemplate = field(default_factory=lambda: PromptTemplate(DEFAULT_TEMPLATE))

    @property
    def host(self) -> str:
        return self.bind.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.bind.rsplit(":", 1)[1])


def _ratio_label(ratio: float) -> str:
    return str(int(ratio)) if float(ratio).is_integer() else str(ratio)


def _error(status: int, message: str, detail: object | None = None) -> JSONResponse:
    body: dict = {"error": message}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


async def _json_body(request: Request) -> dict | JSONResponse:
    try:
        body = await request.json()
    except (ValueError, UnicodeDecodeError):
        return _error(400, "request body is not valid JSON")
    if not isinstance(body, dict):
        return _error(400, "request body must be a JSON object")
    return body


def create_app(catalog: DatasetCatalog, config: ServiceConfig | None = None) -> FastAPI:
    cfg = config if config is not None else ServiceConfig()
    if not catalog.instances:
        raise CatalogError("catalog is empty; need at least one instance")
    log = EpisodeLog(cfg.log_path)
    app = FastAPI(title="sie-env-service")
    app.state.catalog = catalog
    app.state.episode_log = log
    app.state.config = cfg

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "datasets": len(catalog.datasets)}

    @app.get("/instances/{instance_id}")
    async def get_instance(instance_id: str):
        inst = catalog.get(instance_id)
        if inst is None:
            return _error(404, f"unknown instance id {instance_id!r}")
        return inst.to_json_dict()

    @app.post("/sample")
    async def sample(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        ratio = body.get("ratio")
        seed = body.get("seed")
        if ratio is not None and not isinstance(ratio, (int, float)):
            return _error(400, "ratio must be a number")
        if seed is not None and not isinstance(seed, int):
            return _error(400, "seed must be an integer")
        inst = catalog.sample(ratio=ratio, seed=seed)
        if inst is None:
            return _error(404, f"no instances at ratio {ratio}")
        return {
            "id": inst.id,
            "ratio": inst.ratio,
            "prompt": cfg.template.render(inst.question, inst.context),
            "instance": inst.to_json_dict(),
        }

    @app.post("/score")
    async def score(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        instance_id = body.get("instance_id")
        response = body.get("response")
        if not isinstance(instance_id, str):
            return _error(400, "instance_id must be a string")
        if not isinstance(response, str):
            return _error(400, "response must be a string")
        inst = catalog.get(instance_id)
        if inst is None:
            return _error(404, f"unknown instance id {instance_id!r}")
        rewards = total_reward(response, list(inst.gold_answers), cfg.format_weight)
        # Persist before answering: the log is the source of truth.
        log.append(inst.id, float(inst.ratio), response, rewards,
                   client_tag=body.get("client_tag"))
        return {
            "answer_reward": rewards.answer_reward,
            "format_reward": rewards.format_reward,
            "total": rewards.total,
        }

    @app.post("/score_group")
    async def score_group(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        instance_id = body.get("instance_id")
        responses = body.get("responses")
        if not isinstance(instance_id, str):
            return _error(400, "instance_id must be a string")
        if not isinstance(responses, list) or not responses:
            return _error(400, "responses must be a non-empty list")
        if not all(isinstance(r, str) for r in responses):
            return _error(400, "responses must all be strings")
        inst = catalog.get(instance_id)
        if inst is None:
            return _error(404, f"unknown instance id {instance_id!r}")

        gold = list(inst.gold_answers)
        breakdowns = [total_reward(r, gold, cfg.format_weight) for r in responses]
        totals = tuple(b.total for b in breakdowns)
        grpo_cfg_kwargs = {}
        for key in ("clip_epsilon", "kl_coeff", "std_floor"):
            if key in body:
                grpo_cfg_kwargs[key] = body[key]
        try:
            grpo_cfg = GrpoConfig(**grpo_cfg_kwargs)
        except (TypeError, ValueError) as exc:
            return _error(400, "bad grpo config", detail=str(exc))

        ratios_new = body.get("ratios_new_over_old")
        ratios_ref = body.get("ratios_ref_over_new")
        try:
            group = RolloutGroup(
                rewards=totals,
                ratios_new_over_old=tuple(ratios_new) if ratios_new is not None else None,
                ratios_ref_over_new=tuple(ratios_ref) if ratios_ref is not None else None,
            )
        except (TypeError, ValueError) as exc:
            return _error(400, "bad rollout group", detail=str(exc))

        advantages = group_advantages(group.rewards, grpo_cfg.std_floor)
        result: GrpoResult | None = None
        if group.ratios_new_over_old is not None and group.ratios_ref_over_new is not None:
            result = grpo_objective(group, grpo_cfg)

        for response, rewards in zip(responses, breakdowns):
            log.append(inst.id, float(inst.ratio), response, rewards,
                       client_tag=body.get("client_tag"))

        out: dict = {
            "rewards": [
                {
                    "answer_reward": b.answer_reward,
                    "format_reward": b.format_reward,
                    "total": b.total,
                }
                for b in breakdowns
            ],
            "advantages": advantages,
        }
        if result is not None:
            out["objective"] = result.to_json_dict()
        return out

    @app.get("/stats")
    async def stats() -> dict:
        instance_counts = {
            _ratio_label(ratio): len(ids) for ratio, ids in sorted(catalog.by_ratio.items())
        }
        return {"instances": instance_counts, **log.stats()}

    return app


def serve(catalog: DatasetCatalog, config: ServiceConfig | None = None) -> None:
    """Blocking uvicorn run; raises on bind failure."""
    import uvicorn

    cfg = config if config is not None else ServiceConfig()
    app = create_app(catalog, cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
