"""Compact immutable triple store with string interning and dual adjacency.

Triples are ingested from TSV (``head<TAB>relation<TAB>tail``) into dense
integer handles. After loading, the store is frozen: forward (head -> out
edges) and inverse (tail -> in edges) adjacency are kept as CSR arrays so
that multi-million-triple graphs stay within a few hundred MB and neighbor
queries are O(degree).
"""

from __future__ import annotations

import enum
import io
import json
from array import array
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

MAX_HANDLE = 2**32 - 1


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"
    BOTH = "both"


@dataclass
class LoadReport:
    """Summary of one TSV ingestion, serializable for CI artifacts."""

    triples: int = 0
    entities: int = 0
    relations: int = 0
    duplicates: int = 0
    skipped_lines: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "triples": self.triples,
                "entities": self.entities,
                "relations": self.relations,
                "duplicates": self.duplicates,
                "skipped_lines": self.skipped_lines,
            },
            ensure_ascii=False,
        )


class Interner:
    """Dense string -> id table. Handles are allocated in first-seen order."""

    __slots__ = ("_ids", "_strings")

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._strings: list[str] = []

    def intern(self, s: str) -> int:
        handle = self._ids.get(s)
        if handle is None:
            handle = len(self._strings)
            if handle > MAX_HANDLE:
                raise ValueError(f"intern table exceeds {MAX_HANDLE} handles")
            self._ids[s] = handle
            self._strings.append(s)
        return handle

    def lookup(self, s: str) -> int | None:
        return self._ids.get(s)

    def resolve(self, handle: int) -> str:
        if not 0 <= handle < len(self._strings):
            raise ValueError(f"handle {handle} out of range [0, {len(self._strings)})")
        return self._strings[handle]

    def __len__(self) -> int:
        return len(self._strings)


def _as_u32(a: "array") -> np.ndarray:
    return np.frombuffer(a, dtype=f"u{a.itemsize}").astype(np.uint32, copy=False)


class KnowledgeGraph:
    """Immutable doubly-indexed triple store.

    Construct via :func:`load_triples`; mutation after construction is
    unsupported. Query results are deterministic: edge lists are sorted by
    (relation id, entity id), triples by (head, relation, tail).
    """

    def __init__(
        self,
        entities: Interner,
        relations: Interner,
        heads: np.ndarray,
        rels: np.ndarray,
        tails: np.ndarray,
        _presorted: bool = False,
    ) -> None:
        self._entities = entities
        self._relations = relations
        if not _presorted:
            order = np.lexsort((tails, rels, heads))
            heads, rels, tails = heads[order], rels[order], tails[order]
        self._h = np.ascontiguousarray(heads)
        self._r = np.ascontiguousarray(rels)
        self._t = np.ascontiguousarray(tails)
        n_ent = len(entities)
        node_ids = np.arange(n_ent + 1, dtype=np.int64)
        self._fwd_indptr = np.searchsorted(self._h, node_ids)
        inv_order = np.lexsort((self._h, self._r, self._t))
        self._inv_t = np.ascontiguousarray(self._t[inv_order])
        self._inv_r = np.ascontiguousarray(self._r[inv_order])
        self._inv_h = np.ascontiguousarray(self._h[inv_order])
        self._inv_indptr = np.searchsorted(self._inv_t, node_ids)

    # -- sizes -----------------------------------------------------------

    @property
    def num_triples(self) -> int:
        return len(self._h)

    @property
    def num_entities(self) -> int:
        return len(self._entities)

    @property
    def num_relations(self) -> int:
        return len(self._relations)

    # -- intern table access ----------------------------------------------

    def resolve_entity(self, handle: int) -> str:
        return self._entities.resolve(handle)

    def resolve_relation(self, handle: int) -> str:
        return self._relations.resolve(handle)

    def entity_id(self, s: str) -> int | None:
        return self._entities.lookup(s)

    def relation_id(self, s: str) -> int | None:
        return self._relations.lookup(s)

    # -- queries -----------------------------------------------------------

    def _check_entity(self, e: int) -> None:
        if not 0 <= e < self.num_entities:
            raise ValueError(f"entity handle {e} out of range [0, {self.num_entities})")

    def forward_edges(self, e: int) -> list[tuple[int, int]]:
        """Out-edges of ``e`` as (relation, tail), sorted by (relation, tail)."""
        self._check_entity(e)
        lo, hi = self._fwd_indptr[e], self._fwd_indptr[e + 1]
        return list(zip(self._r[lo:hi].tolist(), self._t[lo:hi].tolist()))

    def inverse_edges(self, e: int) -> list[tuple[int, int]]:
        """In-edges of ``e`` as (relation, head), sorted by (relation, head)."""
        self._check_entity(e)
        lo, hi = self._inv_indptr[e], self._inv_indptr[e + 1]
        return list(zip(self._inv_r[lo:hi].tolist(), self._inv_h[lo:hi].tolist()))

    def neighbors(
        self, e: int, direction: Direction = Direction.BOTH
    ) -> list[tuple[int, int, Direction]]:
        out: list[tuple[int, int, Direction]] = []
        if direction in (Direction.FORWARD, Direction.BOTH):
            out.extend((r, t, Direction.FORWARD) for r, t in self.forward_edges(e))
        if direction in (Direction.INVERSE, Direction.BOTH):
            out.extend((r, h, Direction.INVERSE) for r, h in self.inverse_edges(e))
        return out

    def triples(self) -> Iterator[Triple]:
        """All triples in canonical (head, relation, tail) order."""
        for h, r, t in zip(self._h.tolist(), self._r.tolist(), self._t.tolist()):
            yield Triple(h, r, t)

    def surface(self, t: Triple) -> tuple[str, str, str]:
        return (
            self.resolve_entity(t.head),
            self.resolve_relation(t.relation),
            self.resolve_entity(t.tail),
        )


def neighbors(
    g: KnowledgeGraph, e: int, direction: Direction = Direction.BOTH
) -> list[tuple[int, int, Direction]]:
    return g.neighbors(e, direction)


def load_triples(
    source: str | bytes | IO[bytes] | IO[str] | Iterable[str],
    strict: bool = False,
) -> tuple[KnowledgeGraph, LoadReport]:
    """Ingest TSV triples from raw text/bytes, a stream, or a line iterable.

    Blank lines and lines starting with ``#`` are skipped silently. Rows with
    a column count other than 3 are recorded in the report (or abort the load
    when ``strict``). Duplicate rows collapse to one triple.
    """
    entities = Interner()
    relations = Interner()
    heads = array("I")
    rels = array("I")
    tails = array("I")
    report = LoadReport()
    intern_e = entities.intern
    intern_r = relations.intern

    lines: Iterable[str]
    if isinstance(source, bytes):
        lines = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    elif hasattr(source, "read") and isinstance(source.read(0), bytes):
        lines = io.TextIOWrapper(source, encoding="utf-8", newline="")
    else:
        lines = source

    for line_no, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            reason = f"expected 3 columns, got {len(parts)}"
            if strict:
                raise ValueError(f"line {line_no}: {reason}")
            report.skipped_lines.append({"line_no": line_no, "reason": reason})
            continue
        heads.append(intern_e(parts[0]))
        rels.append(intern_r(parts[1]))
        tails.append(intern_e(parts[2]))

    h, r, t = _as_u32(heads), _as_u32(rels), _as_u32(tails)
    if len(h):
        order = np.lexsort((t, r, h))
        h, r, t = h[order], r[order], t[order]
        keep = np.empty(len(h), dtype=bool)
        keep[0] = True
        keep[1:] = (h[1:] != h[:-1]) | (r[1:] != r[:-1]) | (t[1:] != t[:-1])
        report.duplicates = int(len(h) - keep.sum())
        h, r, t = h[keep], r[keep], t[keep]

    g = KnowledgeGraph(entities, relations, h, r, t, _presorted=True)
    report.triples = g.num_triples
    report.entities = g.num_entities
    report.relations = g.num_relations
    return g, report


def dump_triples(g: KnowledgeGraph, sink: IO[str]) -> int:
    """Write all triples back out as TSV (canonical order). Returns row count."""
    n = 0
    for t in g.triples():
        head, rel, tail = g.surface(t)
        sink.write(f"{head}\t{rel}\t{tail}\n")
        n += 1
    return n
