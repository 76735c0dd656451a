"""Seed subgraph retrieval and supporting subgraph extraction.

Seed retrieval expands bounded multi-hop neighborhoods from the question and
answer entity sets and unions them. Support extraction keeps exactly the
edges lying on some shortest question->answer path (per pair, length capped
by the hop bound), computed with BFS on the seed subgraph treated as an
undirected unit-weight graph.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

from .kg import KnowledgeGraph, Triple


class Role(enum.Enum):
    SEED = "seed"
    SUPPORT = "support"
    DISTRACTOR = "distractor"


@dataclass(frozen=True)
class Subgraph:
    """A deduplicated set of triples in canonical order, tagged with a role."""

    triples: tuple[Triple, ...]
    role: Role

    @classmethod
    def from_triples(cls, triples: Iterable[Triple], role: Role) -> "Subgraph":
        canon = sorted({Triple(*t) for t in triples})
        return cls(tuple(canon), role)

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, t: Triple) -> bool:
        return t in set(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def as_set(self) -> frozenset[Triple]:
        return frozenset(self.triples)

    def difference(self, other: "Subgraph", role: Role) -> "Subgraph":
        return Subgraph.from_triples(self.as_set() - other.as_set(), role)

    def union(self, other: "Subgraph", role: Role) -> "Subgraph":
        return Subgraph.from_triples(self.as_set() | other.as_set(), role)


@dataclass(frozen=True)
class Answer:
    text: str
    entity: int | None = None


@dataclass(frozen=True)
class QAInstance:
    id: str
    question: str
    question_entities: tuple[int, ...]
    answers: tuple[Answer, ...]
    n_hop: int

    def __post_init__(self) -> None:
        if not self.question_entities:
            raise ValueError(f"instance {self.id}: question_entities must be non-empty")
        if not self.answers:
            raise ValueError(f"instance {self.id}: answers must be non-empty")
        if self.n_hop < 1:
            raise ValueError(f"instance {self.id}: n_hop must be >= 1, got {self.n_hop}")

    @property
    def gold_answers(self) -> list[str]:
        return [a.text for a in self.answers]

    def linked_answer_entities(self, top_k: int | None = None) -> set[int]:
        answers = self.answers if top_k is None else top_answers(self, top_k)
        return {a.entity for a in answers if a.entity is not None}


def top_answers(inst: QAInstance, k: int = 10) -> list[Answer]:
    """First min(k, len) answers in dataset order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return list(inst.answers[:k])


def multi_hop_search(
    g: KnowledgeGraph, seeds: Iterable[int], hops: int, directed: bool = False
) -> Subgraph:
    """All triples reachable by a walk of length <= hops from any seed.

    Walks are undirected by default (edges traversable both ways); with
    ``directed`` only head->tail steps are taken. ``hops == 0`` yields the
    empty subgraph.
    """
    if hops < 0:
        raise ValueError(f"hops must be >= 0, got {hops}")
    seed_list = sorted(set(seeds))
    for e in seed_list:
        g._check_entity(e)
    edges: set[Triple] = set()
    if hops == 0:
        return Subgraph.from_triples(edges, Role.SEED)
    seen: set[int] = set(seed_list)
    frontier: list[int] = seed_list
    for _ in range(hops):
        if not frontier:
            break
        nxt: list[int] = []
        for u in frontier:
            for r, t in g.forward_edges(u):
                edges.add(Triple(u, r, t))
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
            if not directed:
                for r, h in g.inverse_edges(u):
                    edges.add(Triple(h, r, u))
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
        frontier = nxt
    return Subgraph.from_triples(edges, Role.SEED)


def seed_subgraph(
    g: KnowledgeGraph,
    inst: QAInstance,
    hops: int | None = None,
    split: tuple[int, int] | None = None,
    directed: bool = False,
) -> Subgraph:
    """Bidirectional seed retrieval: question-side and answer-side expansion.

    Default semantics are the union over all (q_hop, a_hop) splits with
    q_hop + a_hop == n_hop; by monotonicity of multi_hop_search in the hop
    bound this equals the (n_hop, n_hop) pair of searches, which is what is
    computed. Pass ``split`` to restrict to a single (q_hop, a_hop) pair.
    Only entity-linked answers contribute to the answer side.
    """
    if not inst.question_entities:
        raise ValueError("question entity set is empty")
    n = inst.n_hop if hops is None else hops
    if split is None:
        q_hop, a_hop = n, n
    else:
        q_hop, a_hop = split
        if q_hop + a_hop != n or q_hop < 0 or a_hop < 0:
            raise ValueError(f"split {split} incompatible with n_hop={n}")
    q_side = multi_hop_search(g, inst.question_entities, q_hop, directed)
    e_a = inst.linked_answer_entities()
    a_side = multi_hop_search(g, e_a, a_hop, directed) if e_a else Subgraph.from_triples([], Role.SEED)
    return q_side.union(a_side, Role.SEED)


def _undirected_adjacency(triples: Sequence[Triple]) -> dict[int, list[tuple[int, Triple]]]:
    adj: dict[int, list[tuple[int, Triple]]] = {}
    for t in triples:
        adj.setdefault(t.head, []).append((t.tail, t))
        adj.setdefault(t.tail, []).append((t.head, t))
    return adj


def _bfs_distances(
    adj: dict[int, list[tuple[int, Triple]]], source: int, cutoff: int
) -> dict[int, int]:
    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        d = dist[u]
        if d >= cutoff:
            continue
        for v, _ in adj.get(u, ()):
            if v not in dist:
                dist[v] = d + 1
                q.append(v)
    return dist


def extract_support(
    seed: Subgraph,
    e_q: Iterable[int],
    e_a: Iterable[int],
    n_hop: int,
    directed: bool = False,
) -> Subgraph:
    """Union of edges on any shortest q->a path of length <= n_hop.

    Shortest is per (q, a) pair, measured on the seed subgraph as a
    unit-weight graph (undirected unless ``directed``). Pairs not connected
    within n_hop contribute nothing; a fully disconnected instance yields an
    empty support subgraph, which is a legal outcome.
    """
    e_q = sorted(set(e_q))
    e_a = sorted(set(e_a))
    if not e_q or not e_a or n_hop < 1 or not len(seed):
        return Subgraph.from_triples([], Role.SUPPORT)

    if directed:
        fwd: dict[int, list[tuple[int, Triple]]] = {}
        rev: dict[int, list[tuple[int, Triple]]] = {}
        for t in seed:
            fwd.setdefault(t.head, []).append((t.tail, t))
            rev.setdefault(t.tail, []).append((t.head, t))
        dist_q = {q: _bfs_distances(fwd, q, n_hop) for q in e_q}
        dist_a = {a: _bfs_distances(rev, a, n_hop) for a in e_a}
    else:
        adj = _undirected_adjacency(seed.triples)
        dist_q = {q: _bfs_distances(adj, q, n_hop) for q in e_q}
        dist_a = {a: _bfs_distances(adj, a, n_hop) for a in e_a}

    support: set[Triple] = set()
    for q in e_q:
        dq = dist_q[q]
        for a in e_a:
            if q == a:
                continue
            d = dq.get(a)
            if d is None or d > n_hop:
                continue
            da = dist_a[a]
            for t in seed:
                du, dv = dq.get(t.head), da.get(t.tail)
                if du is not None and dv is not None and du + 1 + dv == d:
                    support.add(t)
                    continue
                if not directed:
                    du, dv = dq.get(t.tail), da.get(t.head)
                    if du is not None and dv is not None and du + 1 + dv == d:
                        support.add(t)
    return Subgraph.from_triples(support, Role.SUPPORT)


@dataclass
class QALoadReport:
    instances: int = 0
    skipped: int = 0
    warnings: list[dict] = field(default_factory=list)


def load_qa_jsonl(
    source: IO[str] | Iterable[str],
    g: KnowledgeGraph,
    default_n_hop: int = 2,
    n_hop_override: int | None = None,
) -> tuple[list[QAInstance], QALoadReport]:
    """Parse a QA dataset (one JSON object per line) against the store.

    Expected fields per line: id, question, question_entities (surface
    strings), answers ([{"text", "entity"?}]), optional n_hop. Question
    entities that do not resolve in the intern table are dropped with a
    per-instance warning; an instance whose question entities all fail to
    resolve is skipped.
    """
    instances: list[QAInstance] = []
    report = QALoadReport()
    if isinstance(source, bytes):
        source = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        source = source.splitlines()
    for line_no, raw in enumerate(source, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            inst_id = str(obj["id"])
            question = str(obj["question"])
            raw_entities = list(obj["question_entities"])
            raw_answers = list(obj["answers"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            report.skipped += 1
            report.warnings.append({"line_no": line_no, "reason": f"malformed line: {exc}"})
            continue

        q_entities: list[int] = []
        for s in raw_entities:
            handle = g.entity_id(str(s))
            if handle is None:
                report.warnings.append(
                    {"line_no": line_no, "id": inst_id, "reason": f"unresolvable question entity: {s!r}"}
                )
            elif handle not in q_entities:
                q_entities.append(handle)
        answers: list[Answer] = []
        for a in raw_answers:
            if isinstance(a, str):
                answers.append(Answer(text=a))
                continue
            text = str(a["text"])
            entity = None
            if "entity" in a and a["entity"] is not None:
                entity = g.entity_id(str(a["entity"]))
                if entity is None:
                    report.warnings.append(
                        {"line_no": line_no, "id": inst_id, "reason": f"unresolvable answer entity: {a['entity']!r}"}
                    )
            answers.append(Answer(text=text, entity=entity))

        n_hop = n_hop_override if n_hop_override is not None else int(obj.get("n_hop", default_n_hop))
        try:
            instances.append(
                QAInstance(
                    id=inst_id,
                    question=question,
                    question_entities=tuple(q_entities),
                    answers=tuple(answers),
                    n_hop=n_hop,
                )
            )
        except ValueError as exc:
            report.skipped += 1
            report.warnings.append({"line_no": line_no, "id": inst_id, "reason": str(exc)})
    report.instances = len(instances)
    return instances, report
