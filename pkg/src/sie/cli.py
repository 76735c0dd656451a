"""Command-line pipeline: build, stats, score, serve, oracle.

Exit codes are a stable contract: 0 success, 1 input error (unreadable
files, bad flags, bad request data), 2 internal invariant violation
(engine/oracle mismatch, corrupted state). Builds fan questions out over
a worker pool but always write in input order, so scheduling never leaks
into the output bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .builder import (
    BuildConfig,
    DEFAULT_RATIOS,
    PromptTemplate,
    SIEInstance,
    build_question,
    serialize_dataset,
)
from .distractors import RemoteConfig, ScorerSpec
from .kg import load_triples
from .oracle import support_oracle
from .paths import load_qa_jsonl, seed_subgraph, extract_support
from .rewards import DEFAULT_FORMAT_WEIGHT, total_reward
from .service import CatalogError, DatasetCatalog, ServiceConfig, serve

RERANKER_URL_ENV = "SIE_RERANKER_URL"


class CliInputError(Exception):
    """Bad flags or unreadable/invalid input files; exits 1."""


class _Parser(argparse.ArgumentParser):
    # Input mistakes exit 1 under this tool's contract, not argparse's 2.
    def error(self, message: str):  # type: ignore[override]
        raise CliInputError(message)


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_ratio_list(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise CliInputError(f"--ratios has a non-numeric entry: {part!r}") from None
        out.append(int(value) if value.is_integer() else value)
    if not out:
        raise CliInputError("--ratios must name at least one percentage")
    return tuple(out)


def parse_scorer(text: str | None) -> ScorerSpec:
    if text is None or text == "lexical":
        return ScorerSpec(kind="lexical")
    if text == "remote" or text.startswith("remote:"):
        url = text[len("remote:"):] if text.startswith("remote:") else ""
        if not url:
            url = os.environ.get(RERANKER_URL_ENV, "")
        if not url:
            raise CliInputError(
                f"remote scorer needs a URL: --scorer remote:URL or {RERANKER_URL_ENV}"
            )
        return ScorerSpec(kind="remote", remote=RemoteConfig(url=url))
    raise CliInputError(f"unknown scorer {text!r}; expected 'lexical' or 'remote:URL'")


@dataclass
class RunManifest:
    config: dict
    inputs: dict
    outputs: dict
    counts: dict
    master_seed: int
    timings_s: dict

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "counts": self.counts,
            "master_seed": self.master_seed,
            "timings_s": self.timings_s,
        }


def _ratio_filename(ratio) -> str:
    return f"sie_{ratio}.jsonl"


def cmd_build(args) -> int:
    t0 = time.perf_counter()
    try:
        with open(args.kg, "rb") as fh:
            g, kg_report = load_triples(fh.read())
        with open(args.qa, "r", encoding="utf-8") as fh:
            instances, qa_report = load_qa_jsonl(
                fh.read(), g, n_hop_override=args.n_hop
            )
    except OSError as exc:
        raise CliInputError(f"cannot read input: {exc}") from exc
    for w in qa_report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    t_load = time.perf_counter() - t0

    try:
        cfg = BuildConfig(
            ratios=parse_ratio_list(args.ratios) if args.ratios else DEFAULT_RATIOS,
            prompt_budget_tokens=args.budget_tokens,
            keep_k=args.keep_k,
            master_seed=args.seed,
            n_hop_override=args.n_hop,
            directed=args.directed,
            scorer=parse_scorer(args.scorer),
        )
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc

    t1 = time.perf_counter()
    workers = args.workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() preserves input order, so output bytes never depend on timing
        per_question = list(pool.map(lambda q: build_question(g, q, cfg), instances))
    t_build = time.perf_counter() - t1

    t2 = time.perf_counter()
    os.makedirs(args.out, exist_ok=True)
    outputs: dict[str, str] = {}
    for idx, ratio in enumerate(cfg.ratios):
        path = os.path.join(args.out, _ratio_filename(ratio))
        serialize_dataset((built[idx] for built in per_question), path)
        outputs[_ratio_filename(ratio)] = _sha256_file(path)
    t_write = time.perf_counter() - t2

    all_built = [inst for built in per_question for inst in built]
    manifest = RunManifest(
        config={
            "ratios": list(cfg.ratios),
            "prompt_budget_tokens": cfg.prompt_budget_tokens,
            "keep_k": cfg.keep_k,
            "n_hop_override": cfg.n_hop_override,
            "directed": cfg.directed,
            "scorer": cfg.scorer.kind,
            "estimator_kind": cfg.estimator_kind,
        },
        inputs={
            "kg": {"path": args.kg, "sha256": _sha256_file(args.kg),
                   "triples": kg_report.triples, "entities": kg_report.entities,
                   "relations": kg_report.relations},
            "qa": {"path": args.qa, "sha256": _sha256_file(args.qa),
                   "instances": len(instances), "skipped": qa_report.skipped},
        },
        outputs=outputs,
        counts={
            "questions": len(instances),
            "instances": len(all_built),
            "empty_support_questions": sum(
                1 for built in per_question if built and built[0].n_support_total == 0
            ),
            "under_budget_instances": sum(1 for inst in all_built if inst.under_budget),
        },
        master_seed=cfg.master_seed,
        timings_s={"load": round(t_load, 3), "build": round(t_build, 3),
                   "write": round(t_write, 3)},
    )
    manifest_path = os.path.join(args.out, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest.to_json_dict(), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"built {len(all_built)} instances over {len(cfg.ratios)} ratios -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    try:
        with open(args.data, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliInputError(f"cannot read dataset: {exc}") from exc
    instances: list[SIEInstance] = []
    malformed = 0
    for i, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            instances.append(SIEInstance.from_json_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError):
            malformed += 1
            print(f"warning: line {i} malformed, skipped", file=sys.stderr)
    summary = {
        "instances": len(instances),
        "malformed_lines": malformed,
        "mean_context_size": (
            sum(len(inst.context) for inst in instances) / len(instances)
            if instances else 0.0
        ),
        "empty_support_fraction": (
            sum(1 for inst in instances if inst.n_support_total == 0) / len(instances)
            if instances else 0.0
        ),
        "token_estimate_histogram": _token_histogram(instances),
    }
    print(json.dumps(summary, indent=2))
    return 0


def _token_histogram(instances: list[SIEInstance], bucket: int = 1024) -> dict[str, int]:
    hist: dict[str, int] = {}
    for inst in instances:
        lo = (inst.token_estimate // bucket) * bucket
        key = f"{lo}-{lo + bucket - 1}"
        hist[key] = hist.get(key, 0) + 1
    return dict(sorted(hist.items(), key=lambda kv: int(kv[0].split("-")[0])))


def cmd_score(args) -> int:
    try:
        by_id: dict[str, SIEInstance] = {}
        with open(args.data, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    inst = SIEInstance.from_json_dict(json.loads(line))
                    by_id[inst.id] = inst
        with open(args.responses, "r", encoding="utf-8") as fh:
            response_lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise CliInputError(f"cannot read input: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise CliInputError(f"malformed dataset: {exc}") from exc

    scored = 0
    hits = 0
    unknown = 0
    for line in response_lines:
        try:
            obj = json.loads(line)
            rid, response = obj["id"], obj["response"]
        except (ValueError, KeyError, TypeError) as exc:
            raise CliInputError(f"malformed response line: {exc}") from exc
        inst = by_id.get(rid)
        if inst is None:
            unknown += 1
            print(f"warning: unknown instance id {rid!r}, excluded", file=sys.stderr)
            continue
        b = total_reward(response, list(inst.gold_answers), args.format_weight)
        print(json.dumps({
            "id": rid,
            "answer_reward": b.answer_reward,
            "format_reward": b.format_reward,
            "total": b.total,
        }))
        scored += 1
        hits += 1 if b.answer_reward == 1.0 else 0
    aggregate = {
        "scored": scored,
        "unknown_ids": unknown,
        "pass_at_1": (hits / scored) if scored else 0.0,
    }
    print(json.dumps(aggregate))
    return 0


def cmd_serve(args) -> int:
    try:
        catalog = DatasetCatalog.from_dir(args.data)
    except CatalogError as exc:
        raise CliInputError(str(exc)) from exc
    template = None
    if args.template:
        try:
            with open(args.template, encoding="utf-8") as fh:
                template = PromptTemplate(fh.read())
        except OSError as exc:
            raise CliInputError(f"cannot read template: {exc}") from exc
        except ValueError as exc:
            raise CliInputError(str(exc)) from exc
    cfg_kwargs = dict(bind=args.bind, log_path=args.log, format_weight=args.format_weight)
    if template is not None:
        cfg_kwargs["template"] = template
    try:
        serve(catalog, ServiceConfig(**cfg_kwargs))
    except (OSError, ValueError) as exc:
        print(f"error: cannot serve on {args.bind}: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_oracle(args) -> int:
    try:
        with open(args.kg, "rb") as fh:
            g, _ = load_triples(fh.read())
        with open(args.qa, "r", encoding="utf-8") as fh:
            instances, _ = load_qa_jsonl(fh.read(), g, n_hop_override=args.n_hop)
    except OSError as exc:
        raise CliInputError(f"cannot read input: {exc}") from exc
    if not instances:
        raise CliInputError("no usable instances in the dataset")

    rng = random.Random(args.seed)
    n = args.n
    picked = [instances[rng.randrange(len(instances))] for _ in range(n)]
    mismatches: list[dict] = []
    for inst in picked:
        seed = seed_subgraph(g, inst, directed=args.directed)
        e_q = list(inst.question_entities)
        e_a = inst.linked_answer_entities(top_k=10)
        engine = extract_support(seed, e_q, e_a, inst.n_hop, directed=args.directed)
        expected = support_oracle(seed, e_q, e_a, inst.n_hop, directed=args.directed)
        engine_set = engine.as_set()
        if args.inject_fault and engine_set:
            # Self-test: drop one edge so the comparator must fire.
            engine_set = engine_set - {next(iter(sorted(engine_set)))}
        if engine_set != expected.as_set():
            mismatches.append({
                "id": inst.id,
                "engine_only": sorted(map(tuple, engine_set - expected.as_set())),
                "oracle_only": sorted(map(tuple, expected.as_set() - engine_set)),
            })
    report = {"checked": n, "mismatches": mismatches}
    print(json.dumps(report, indent=2))
    if args.inject_fault:
        # The harness passes its self-test only by catching the planted fault.
        return 0 if mismatches else 2
    return 0 if not mismatches else 2


def build_parser() -> _Parser:
    p = _Parser(prog="sie", description="Structured in-context environment toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct SIE datasets from a KG and QA file")
    b.add_argument("--kg", required=True, help="triples TSV path")
    b.add_argument("--qa", required=True, help="QA JSONL path")
    b.add_argument("--ratios", default=None, help="comma-separated percentages")
    b.add_argument("--n-hop", type=int, default=None, help="override per-instance hop count")
    b.add_argument("--budget-tokens", type=int, default=8192)
    b.add_argument("--keep-k", type=int, default=20)
    b.add_argument("--scorer", default="lexical", help="'lexical' or 'remote:URL'")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--directed", action="store_true")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("stats", help="summarize a built dataset file")
    s.add_argument("--data", required=True, help="dataset JSONL path")
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("score", help="score responses offline against a dataset")
    c.add_argument("--data", required=True)
    c.add_argument("--responses", required=True, help='JSONL of {"id","response"}')
    c.add_argument("--format-weight", type=float, default=DEFAULT_FORMAT_WEIGHT)
    c.set_defaults(func=cmd_score)

    v = sub.add_parser("serve", help="serve built datasets over HTTP")
    v.add_argument("--data", required=True, help="directory of dataset *.jsonl files")
    v.add_argument("--bind", default="127.0.0.1:8000")
    v.add_argument("--log", default="episodes.jsonl")
    v.add_argument("--format-weight", type=float, default=DEFAULT_FORMAT_WEIGHT)
    v.add_argument("--template", default=None, help="prompt template file")
    v.set_defaults(func=cmd_serve)

    o = sub.add_parser("oracle", help="cross-check support extraction against brute force")
    o.add_argument("--kg", required=True)
    o.add_argument("--qa", required=True)
    o.add_argument("--n", type=int, default=100, help="sampled instance count")
    o.add_argument("--n-hop", type=int, default=None)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--directed", action="store_true")
    o.add_argument("--inject-fault", action="store_true",
                   help="plant a mismatch to self-test the comparator")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
