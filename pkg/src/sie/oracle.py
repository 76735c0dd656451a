"""Exhaustive-enumeration oracle for supporting-subgraph extraction.

Deliberately independent of the BFS implementation in :mod:`sie.paths`:
enumerates every simple path up to the hop bound by depth-first search,
then applies per-pair minimum-length filtering. Exponential in the hop
bound, so only usable on small graphs; that is the point.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .kg import Triple
from .paths import Role, Subgraph


def _enumerate_paths(
    adj: dict[int, list[tuple[int, Triple]]],
    source: int,
    targets: set[int],
    max_len: int,
) -> dict[int, list[list[Triple]]]:
    """All simple paths from source to each target with length <= max_len."""
    found: dict[int, list[list[Triple]]] = {t: [] for t in targets}
    path_edges: list[Triple] = []
    on_path = {source}

    def dfs(u: int) -> None:
        if u in targets and path_edges:
            found[u].append(list(path_edges))
        if len(path_edges) == max_len:
            return
        for v, edge in adj.get(u, ()):
            if v in on_path:
                continue
            on_path.add(v)
            path_edges.append(edge)
            dfs(v)
            path_edges.pop()
            on_path.remove(v)

    dfs(source)
    return found


def support_oracle(
    seed: Subgraph,
    e_q: Iterable[int],
    e_a: Iterable[int],
    n_hop: int,
    directed: bool = False,
) -> Subgraph:
    """Edge union of all minimum-length q->a paths within n_hop, by brute force."""
    e_q = sorted(set(e_q))
    e_a = sorted(set(e_a))
    adj: dict[int, list[tuple[int, Triple]]] = {}
    for t in seed:
        adj.setdefault(t.head, []).append((t.tail, t))
        if not directed:
            adj.setdefault(t.tail, []).append((t.head, t))

    edges: set[Triple] = set()
    targets = set(e_a)
    for q in e_q:
        per_target = _enumerate_paths(adj, q, targets, n_hop)
        for a in e_a:
            if a == q:
                continue
            paths = per_target[a]
            if not paths:
                continue
            shortest = min(len(p) for p in paths)
            for p in paths:
                if len(p) == shortest:
                    edges.update(p)
    return Subgraph.from_triples(edges, Role.SUPPORT)


def multi_hop_oracle(
    triples: Sequence[Triple], seeds: Iterable[int], hops: int, directed: bool = False
) -> Subgraph:
    """Walk-enumeration counterpart of multi_hop_search for small graphs."""
    adj: dict[int, list[tuple[int, Triple]]] = {}
    for t in triples:
        adj.setdefault(t.head, []).append((t.tail, t))
        if not directed:
            adj.setdefault(t.tail, []).append((t.head, t))
    edges: set[Triple] = set()

    # enumerate every walk of length <= hops; depth cap keeps this bounded
    def walk(u: int, remaining: int) -> None:
        if remaining == 0:
            return
        for v, edge in adj.get(u, ()):
            edges.add(edge)
            walk(v, remaining - 1)

    for s in set(seeds):
        walk(s, hops)
    return Subgraph.from_triples(edges, Role.SEED)
