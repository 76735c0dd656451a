#!/usr/bin/env python3
"""Benchmark store loading and retrieval latency on a synthetic KG.

Generates a TSV with an exact triple and entity count (a pairing spine
guarantees every entity appears; random fill is deduplicated and topped
up), then measures load time, resident memory, and two-hop retrieval
latency. Defaults reproduce the reference scale: 8.3M triples over
2.56M entities.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import tempfile
import time

import numpy as np
import psutil

from sie.kg import load_triples
from sie.paths import Answer, QAInstance, seed_subgraph


def synthesize_tsv(path: str, n_entities: int, n_triples: int, n_rels: int, seed: int) -> None:
    if n_triples < n_entities // 2:
        raise ValueError("need at least n_entities/2 triples to cover all entities")
    rng = np.random.default_rng(seed)
    sh = np.arange(0, n_entities, 2, dtype=np.int64)
    sr = rng.integers(0, n_rels, len(sh), dtype=np.int64)
    spine = (sh * n_rels + sr) * n_entities + (sh + 1)
    need = n_triples - len(spine)
    rh = rng.integers(0, n_entities, need, dtype=np.int64)
    rr = rng.integers(0, n_rels, need, dtype=np.int64)
    rt = rng.integers(0, n_entities, need, dtype=np.int64)
    codes = np.unique(np.concatenate([spine, (rh * n_rels + rr) * n_entities + rt]))
    extras: set[int] = set()
    pr = random.Random(seed)
    while len(codes) + len(extras) < n_triples:
        c = (pr.randrange(n_entities) * n_rels + pr.randrange(n_rels)) * n_entities \
            + pr.randrange(n_entities)
        i = int(np.searchsorted(codes, c))
        if (i < len(codes) and codes[i] == c) or c in extras:
            continue
        extras.add(c)
    if extras:
        codes = np.concatenate([codes, np.fromiter(extras, dtype=np.int64)])
    t_col = codes % n_entities
    hr = codes // n_entities
    r_col = hr % n_rels
    h_col = hr // n_rels
    with open(path, "w", encoding="utf-8") as fh:
        chunk = 500_000
        for lo in range(0, len(codes), chunk):
            hs = h_col[lo:lo + chunk].tolist()
            rs = r_col[lo:lo + chunk].tolist()
            ts = t_col[lo:lo + chunk].tolist()
            fh.write("\n".join(f"e{h}\trel{r}\te{t}" for h, r, t in zip(hs, rs, ts)))
            fh.write("\n")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entities", type=int, default=2_560_000)
    parser.add_argument("--triples", type=int, default=8_300_000)
    parser.add_argument("--relations", type=int, default=20)
    parser.add_argument("--queries", type=int, default=1000)
    parser.add_argument("--n-hop", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--report", default=None, help="write the numbers to this JSON path")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as work:
        path = os.path.join(work, "kg.tsv")
        t0 = time.perf_counter()
        synthesize_tsv(path, args.entities, args.triples, args.relations, args.seed)
        gen_s = time.perf_counter() - t0
        tsv_mb = os.path.getsize(path) / 1e6
        print(f"generated {args.triples} triples ({tsv_mb:.0f} MB) in {gen_s:.1f}s")

        t1 = time.perf_counter()
        with open(path, "r", encoding="utf-8") as fh:
            g, report = load_triples(fh)
        load_s = time.perf_counter() - t1
        rss_gib = psutil.Process().memory_info().rss / (1 << 30)
        print(f"loaded {report.triples} triples / {report.entities} entities "
              f"in {load_s:.1f}s, rss {rss_gib:.2f} GiB")

    qr = random.Random(args.seed + 1)
    times = []
    for _ in range(args.queries):
        inst = QAInstance(
            id="bench", question="?",
            question_entities=(qr.randrange(args.entities),),
            answers=(Answer(text="a", entity=qr.randrange(args.entities)),),
            n_hop=args.n_hop,
        )
        t2 = time.perf_counter()
        seed_subgraph(g, inst)
        times.append(time.perf_counter() - t2)
    times.sort()
    median_ms = times[len(times) // 2] * 1000
    p95_ms = times[int(len(times) * 0.95)] * 1000
    print(f"{args.queries} {args.n_hop}-hop queries: median {median_ms:.2f}ms, "
          f"p95 {p95_ms:.2f}ms")

    if args.report:
        payload = {
            "triples": report.triples,
            "entities": report.entities,
            "relations": report.relations,
            "generate_s": round(gen_s, 2),
            "load_s": round(load_s, 2),
            "rss_gib": round(rss_gib, 3),
            "queries": args.queries,
            "n_hop": args.n_hop,
            "query_median_ms": round(median_ms, 3),
            "query_p95_ms": round(p95_ms, 3),
        }
        os.makedirs(os.path.dirname(args.report) or ".", exist_ok=True)
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"report written to {args.report}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
