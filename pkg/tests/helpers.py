"""Shared generators and independent oracles used across the test suite.

Oracles here intentionally use different code paths from the library
(numpy statistics, Decimal arithmetic, dict-based adjacency) so frozen
expectations are not self-confirming.
"""

from __future__ import annotations

import math
import random
from decimal import Decimal

import numpy as np

from sie.kg import KnowledgeGraph, load_triples
from sie.paths import Answer, QAInstance


def random_kg(
    rng: random.Random,
    max_nodes: int = 200,
    max_edges: int = 800,
    max_rels: int = 12,
) -> KnowledgeGraph:
    """Random multigraph-shaped TSV -> store. Self-loops and dup rows allowed."""
    n_nodes = rng.randint(2, max_nodes)
    n_edges = rng.randint(1, max_edges)
    n_rels = rng.randint(1, max_rels)
    lines = [
        f"n{rng.randrange(n_nodes)}\trel{rng.randrange(n_rels)}\tn{rng.randrange(n_nodes)}"
        for _ in range(n_edges)
    ]
    g, _ = load_triples("\n".join(lines))
    return g


def random_instance(rng: random.Random, g: KnowledgeGraph, n_hop: int) -> QAInstance:
    """QA instance over random existing entities, every answer linked."""
    n = g.num_entities
    q_entities = tuple(sorted({rng.randrange(n) for _ in range(rng.randint(1, 3))}))
    a_entities = sorted({rng.randrange(n) for _ in range(rng.randint(1, 3))})
    answers = tuple(Answer(text=g.resolve_entity(a), entity=a) for a in a_entities)
    return QAInstance(
        id=f"rand-{rng.randrange(10**9)}",
        question="which nodes connect here?",
        question_entities=q_entities,
        answers=answers,
        n_hop=n_hop,
    )


def brute_force_edges(g: KnowledgeGraph) -> set[tuple[int, int, int]]:
    """Adjacency check baseline: all triples as plain tuples."""
    return {(t.head, t.relation, t.tail) for t in g.triples()}


def zscores_oracle(rewards, floor: float = 1e-8) -> list[float]:
    """Numpy implementation of group normalization, population std.

    All-equal groups are exact zeros by contract, not by cancellation.
    """
    x = np.asarray(rewards, dtype=np.float64)
    if np.all(x == x[0]):
        return [0.0] * len(x)
    std = float(np.std(x))
    return list((x - np.mean(x)) / max(std, floor))


def retention_oracle(size: int, ratio) -> int:
    """Decimal half-up: floor(ratio/100 * size + 0.5)."""
    return int(math.floor(Decimal(str(ratio)) * size / Decimal(100) + Decimal("0.5")))
