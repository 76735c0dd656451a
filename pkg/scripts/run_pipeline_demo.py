#!/usr/bin/env python3
"""End-to-end walkthrough: build the toy corpus, serve it, score rollouts.

Spins a real HTTP server on a local port, so this demonstrates exactly what
a trainer process would see.
"""

from __future__ import annotations

import argparse
import json
import tempfile
import threading
import time

import httpx
import uvicorn

from sie.cli import main as sie_main
from sie.service import DatasetCatalog, ServiceConfig, create_app
from sie.toydata import write_corpus


def start_server(data_dir: str, log_path: str, port: int) -> tuple[uvicorn.Server, threading.Thread]:
    catalog = DatasetCatalog.from_dir(data_dir)
    app = create_app(catalog, ServiceConfig(bind=f"127.0.0.1:{port}", log_path=log_path))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    with httpx.Client() as client:
        for _ in range(100):
            try:
                if client.get(base + "/healthz").status_code == 200:
                    return server, thread
            except httpx.TransportError:
                pass
            time.sleep(0.05)
    raise RuntimeError("server did not come up")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8321)
    parser.add_argument("--budget-tokens", type=int, default=256)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as work:
        kg_path, qa_path = write_corpus(work)
        built = f"{work}/built"
        rc = sie_main([
            "build", "--kg", kg_path, "--qa", qa_path, "--out", built,
            "--budget-tokens", str(args.budget_tokens),
        ])
        if rc != 0:
            return rc
        print("\nmanifest counts:")
        with open(f"{built}/manifest.json", encoding="utf-8") as fh:
            print(json.dumps(json.load(fh)["counts"], indent=2))

        server, thread = start_server(built, f"{work}/episodes.jsonl", args.port)
        base = f"http://127.0.0.1:{args.port}"
        try:
            with httpx.Client(base_url=base) as client:
                sampled = client.post("/sample", json={"ratio": 100, "seed": 7}).json()
                print(f"\nsampled {sampled['id']}; prompt starts:")
                print("  " + sampled["prompt"][:160].replace("\n", "\n  ") + "...")

                gold = sampled["instance"]["gold_answers"][0]
                good = f"<think>reading the triples</think><answer>{gold}</answer>"
                scored = client.post(
                    "/score", json={"instance_id": sampled["id"], "response": good}
                ).json()
                print(f"\ncorrect response scored: {scored}")

                group = client.post("/score_group", json={
                    "instance_id": sampled["id"],
                    "responses": [good, good, "<think>?</think><answer>wrong</answer>", "junk"],
                    "ratios_new_over_old": [1.0, 1.0, 1.0, 1.0],
                    "ratios_ref_over_new": [1.0, 1.0, 1.0, 1.0],
                }).json()
                print(f"group advantages: {group['advantages']}")
                print(f"group objective:  {group['objective']['objective']:.6f}")

                print(f"\nservice stats: {json.dumps(client.get('/stats').json())}")
        finally:
            server.should_exit = True
            thread.join(timeout=5)
    print("\ndemo complete")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
