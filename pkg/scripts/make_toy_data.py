#!/usr/bin/env python3
"""Write the bundled toy corpus (KG TSV + QA JSONL) to a directory."""

from __future__ import annotations

import argparse

from sie.toydata import write_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/toy", help="output directory")
    args = parser.parse_args()
    kg_path, qa_path = write_corpus(args.out)
    print(f"wrote {kg_path}")
    print(f"wrote {qa_path}")
    print(f"next: sie build --kg {kg_path} --qa {qa_path} --out data/toy/built")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
