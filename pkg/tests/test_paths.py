from __future__ import annotations

import random

import pytest

from helpers import random_instance, random_kg
from sie.kg import Triple, load_triples
from sie.oracle import multi_hop_oracle, support_oracle
from sie.paths import (
    Answer,
    QAInstance,
    Role,
    Subgraph,
    extract_support,
    load_qa_jsonl,
    multi_hop_search,
    seed_subgraph,
    top_answers,
)

CHAIN = "a\tr1\tb\nb\tr2\tc\n"


def surfaces(g, sub: Subgraph) -> set[tuple[str, str, str]]:
    return {g.surface(t) for t in sub}


# -- Subgraph ---------------------------------------------------------------


def test_subgraph_dedup_and_canonical_order():
    ts = [Triple(2, 0, 1), Triple(0, 0, 1), Triple(2, 0, 1), Triple(0, 0, 0)]
    sub = Subgraph.from_triples(ts, Role.SEED)
    assert sub.triples == (Triple(0, 0, 0), Triple(0, 0, 1), Triple(2, 0, 1))
    assert len(sub) == 3
    assert Triple(2, 0, 1) in sub
    assert Triple(9, 9, 9) not in sub


def test_subgraph_set_algebra_keeps_role():
    a = Subgraph.from_triples([Triple(0, 0, 1), Triple(1, 0, 2)], Role.SEED)
    b = Subgraph.from_triples([Triple(1, 0, 2)], Role.SUPPORT)
    diff = a.difference(b, Role.DISTRACTOR)
    assert diff.role is Role.DISTRACTOR
    assert diff.as_set() == {Triple(0, 0, 1)}
    union = a.union(b, Role.SEED)
    assert union.as_set() == a.as_set()


# -- QAInstance -------------------------------------------------------------


def test_qa_instance_validation():
    ans = (Answer("x"),)
    with pytest.raises(ValueError, match="question_entities"):
        QAInstance(id="q", question="?", question_entities=(), answers=ans, n_hop=2)
    with pytest.raises(ValueError, match="answers"):
        QAInstance(id="q", question="?", question_entities=(0,), answers=(), n_hop=2)
    with pytest.raises(ValueError, match="n_hop"):
        QAInstance(id="q", question="?", question_entities=(0,), answers=ans, n_hop=0)


def test_top_answers_dataset_order():
    answers = tuple(Answer(text=f"a{i}", entity=i) for i in range(15))
    inst = QAInstance(id="q", question="?", question_entities=(0,), answers=answers, n_hop=2)
    assert [a.text for a in top_answers(inst, 10)] == [f"a{i}" for i in range(10)]
    assert len(top_answers(inst, 100)) == 15
    assert [a.text for a in top_answers(inst, 1)] == ["a0"]
    with pytest.raises(ValueError):
        top_answers(inst, 0)
    assert inst.gold_answers == [f"a{i}" for i in range(15)]
    assert inst.linked_answer_entities(top_k=10) == set(range(10))
    assert inst.linked_answer_entities() == set(range(15))


# -- multi_hop_search -------------------------------------------------------


def test_multi_hop_chain_cases():
    g, _ = load_triples(CHAIN)
    a, c = g.entity_id("a"), g.entity_id("c")
    assert surfaces(g, multi_hop_search(g, [a], 1)) == {("a", "r1", "b")}
    assert surfaces(g, multi_hop_search(g, [a], 2)) == {("a", "r1", "b"), ("b", "r2", "c")}
    # hop 1 from the tail end walks the edge inversely
    assert surfaces(g, multi_hop_search(g, [c], 1)) == {("b", "r2", "c")}
    assert multi_hop_search(g, [a], 0).triples == ()


def test_multi_hop_directed_stops_at_edge_direction():
    g, _ = load_triples(CHAIN)
    c = g.entity_id("c")
    assert multi_hop_search(g, [c], 2, directed=True).triples == ()
    a = g.entity_id("a")
    assert len(multi_hop_search(g, [a], 2, directed=True)) == 2


def test_multi_hop_rejects_bad_input():
    g, _ = load_triples(CHAIN)
    with pytest.raises(ValueError):
        multi_hop_search(g, [0], -1)
    with pytest.raises(ValueError):
        multi_hop_search(g, [404], 1)


def test_multi_hop_monotone_in_hops():
    rng = random.Random(5)
    for _ in range(10):
        g = random_kg(rng, max_nodes=30, max_edges=60)
        seeds = [rng.randrange(g.num_entities)]
        prev = set()
        for h in range(4):
            cur = multi_hop_search(g, seeds, h).as_set()
            assert prev <= cur
            prev = cur


def test_multi_hop_matches_walk_oracle():
    rng = random.Random(31)
    for _ in range(25):
        g = random_kg(rng, max_nodes=25, max_edges=50)
        triples = list(g.triples())
        seeds = {rng.randrange(g.num_entities) for _ in range(rng.randint(1, 3))}
        hops = rng.randint(0, 3)
        directed = rng.random() < 0.5
        got = multi_hop_search(g, seeds, hops, directed=directed).as_set()
        want = multi_hop_oracle(triples, seeds, hops, directed=directed).as_set()
        assert got == want


# -- seed_subgraph ----------------------------------------------------------


def _instance(g, e_q, answers, n_hop):
    return QAInstance(
        id="t",
        question="?",
        question_entities=tuple(e_q),
        answers=tuple(answers),
        n_hop=n_hop,
    )


def test_seed_union_over_splits_matches_direct_computation():
    # the implementation collapses the split union; verify the collapse
    rng = random.Random(7)
    for _ in range(15):
        g = random_kg(rng, max_nodes=30, max_edges=80)
        inst = random_instance(rng, g, n_hop=rng.randint(1, 3))
        got = seed_subgraph(g, inst).as_set()
        n = inst.n_hop
        want: set[Triple] = set()
        e_a = inst.linked_answer_entities()
        for q_hop in range(n + 1):
            a_hop = n - q_hop
            want |= multi_hop_search(g, inst.question_entities, q_hop).as_set()
            if e_a:
                want |= multi_hop_search(g, e_a, a_hop).as_set()
        assert got == want


def test_seed_chain_example():
    g, _ = load_triples(CHAIN)
    inst = _instance(
        g, [g.entity_id("a")], [Answer("c", g.entity_id("c"))], n_hop=2
    )
    assert surfaces(g, seed_subgraph(g, inst)) == {("a", "r1", "b"), ("b", "r2", "c")}


def test_seed_star_with_disconnected_answer():
    g, _ = load_triples("q\tr\ts1\nq\tr\ts2\nq\tr\ts3\nfar\tr\taway\n")
    inst = _instance(
        g, [g.entity_id("q")], [Answer("nowhere", None)], n_hop=1
    )
    assert surfaces(g, seed_subgraph(g, inst)) == {
        ("q", "r", "s1"), ("q", "r", "s2"), ("q", "r", "s3")
    }


def test_seed_single_split_restriction():
    g, _ = load_triples(CHAIN)
    inst = _instance(g, [g.entity_id("a")], [Answer("c", g.entity_id("c"))], n_hop=2)
    only_q = seed_subgraph(g, inst, split=(2, 0))
    assert surfaces(g, only_q) == {("a", "r1", "b"), ("b", "r2", "c")}
    only_a = seed_subgraph(g, inst, split=(0, 2))
    assert surfaces(g, only_a) == {("a", "r1", "b"), ("b", "r2", "c")}
    with pytest.raises(ValueError):
        seed_subgraph(g, inst, split=(2, 1))


def test_seed_saturates_connected_graph(toy_graph, toy_instances):
    inst = toy_instances["toy-3"]
    seed = seed_subgraph(toy_graph, inst, hops=10)
    assert len(seed) == toy_graph.num_triples


# -- extract_support --------------------------------------------------------


def test_support_diamond_keeps_all_geodesics():
    g, _ = load_triples("q\tr\tx\nx\tr\ta\nq\tr\ty\ny\tr\ta\n")
    e_q = [g.entity_id("q")]
    e_a = [g.entity_id("a")]
    seed = multi_hop_search(g, e_q, 2)
    sup = extract_support(seed, e_q, e_a, 2)
    assert len(sup) == 4


def test_support_excludes_paths_longer_than_bound():
    g, _ = load_triples("q\tr\tx\nx\tr\ty\ny\tr\ta\n")
    e_q, e_a = [g.entity_id("q")], [g.entity_id("a")]
    seed = multi_hop_search(g, e_q, 3)
    assert extract_support(seed, e_q, e_a, 2).triples == ()
    assert len(extract_support(seed, e_q, e_a, 3)) == 3


def test_support_only_minimum_length_paths(toy_graph, toy_instances):
    # direct edge exists, so the two-hop detour must stay out
    inst = toy_instances["toy-2"]
    seed = seed_subgraph(toy_graph, inst)
    sup = extract_support(
        seed, inst.question_entities, inst.linked_answer_entities(top_k=10), inst.n_hop
    )
    assert surfaces(toy_graph, sup) == {
        ("Mira Voss", "people.person.nationality", "Veldania")
    }


def test_support_toy3_triple_diamond(toy_graph, toy_instances):
    inst = toy_instances["toy-3"]
    seed = seed_subgraph(toy_graph, inst)
    sup = extract_support(
        seed, inst.question_entities, inst.linked_answer_entities(top_k=10), inst.n_hop
    )
    assert surfaces(toy_graph, sup) == {
        ("Anik Voss", "people.person.sibling", "Mira Voss"),
        ("Mira Voss", "book.author.works_written", "The Glass Harbor"),
        ("Mira Voss", "book.author.works_written", "Salt Meridian"),
        ("Mira Voss", "people.person.place_of_birth", "Port Ellory"),
        ("The Glass Harbor", "book.written_work.publisher", "Tidewater Press"),
        ("Salt Meridian", "book.written_work.publisher", "Tidewater Press"),
        ("Tidewater Press", "organization.organization.headquarters", "Port Ellory"),
    }


def test_support_toy4_two_routes(toy_graph, toy_instances):
    inst = toy_instances["toy-4"]
    seed = seed_subgraph(toy_graph, inst)
    sup = extract_support(
        seed, inst.question_entities, inst.linked_answer_entities(top_k=10), inst.n_hop
    )
    assert surfaces(toy_graph, sup) == {
        ("Mira Voss", "book.author.works_written", "Salt Meridian"),
        ("Mira Voss", "people.person.place_of_birth", "Port Ellory"),
        ("Salt Meridian", "book.written_work.publisher", "Tidewater Press"),
        ("Tidewater Press", "organization.organization.headquarters", "Port Ellory"),
    }


def test_support_empty_when_answers_unlinked(toy_graph, toy_instances):
    inst = toy_instances["toy-5"]
    seed = seed_subgraph(toy_graph, inst)
    sup = extract_support(
        seed, inst.question_entities, inst.linked_answer_entities(top_k=10), inst.n_hop
    )
    assert sup.triples == ()
    assert sup.role is Role.SUPPORT


def test_support_subset_of_seed_and_oracle_equivalent():
    rng = random.Random(13)
    for _ in range(25):
        g = random_kg(rng, max_nodes=40, max_edges=120)
        inst = random_instance(rng, g, n_hop=rng.randint(1, 3))
        directed = rng.random() < 0.3
        seed = seed_subgraph(g, inst, directed=directed)
        e_q = list(inst.question_entities)
        e_a = inst.linked_answer_entities(top_k=10)
        got = extract_support(seed, e_q, e_a, inst.n_hop, directed=directed)
        assert got.as_set() <= seed.as_set()
        want = support_oracle(seed, e_q, e_a, inst.n_hop, directed=directed)
        assert got.as_set() == want.as_set()


def test_support_same_entity_in_both_sets_contributes_nothing():
    g, _ = load_triples(CHAIN)
    a = g.entity_id("a")
    seed = multi_hop_search(g, [a], 2)
    sup = extract_support(seed, [a], [a], 2)
    assert sup.triples == ()


def test_support_directed_asymmetry():
    g, _ = load_triples("a\tr\tb\n")
    a, b = g.entity_id("a"), g.entity_id("b")
    seed = multi_hop_search(g, [a], 1)
    assert len(extract_support(seed, [a], [b], 1, directed=True)) == 1
    assert extract_support(seed, [b], [a], 1, directed=True).triples == ()
    assert len(extract_support(seed, [b], [a], 1, directed=False)) == 1


# -- load_qa_jsonl ----------------------------------------------------------


def test_load_qa_happy_path(toy_graph):
    src = (
        '{"id": "q1", "question": "who?", "question_entities": ["Mira Voss"],'
        ' "answers": [{"text": "Veldania", "entity": "Veldania"}], "n_hop": 3}\n'
    )
    instances, report = load_qa_jsonl(src, toy_graph)
    assert report.instances == 1 and report.skipped == 0
    inst = instances[0]
    assert inst.n_hop == 3
    assert inst.question_entities == (toy_graph.entity_id("Mira Voss"),)
    assert inst.answers[0].entity == toy_graph.entity_id("Veldania")


def test_load_qa_defaults_and_override(toy_graph):
    src = (
        '{"id": "q1", "question": "?", "question_entities": ["Mira Voss"],'
        ' "answers": [{"text": "x"}]}\n'
    )
    instances, _ = load_qa_jsonl(src, toy_graph)
    assert instances[0].n_hop == 2
    instances, _ = load_qa_jsonl(src, toy_graph, default_n_hop=4)
    assert instances[0].n_hop == 4
    instances, _ = load_qa_jsonl(src, toy_graph, n_hop_override=1)
    assert instances[0].n_hop == 1


def test_load_qa_partial_entity_resolution_warns(toy_graph):
    src = (
        '{"id": "q1", "question": "?", "question_entities": ["Mira Voss", "Nobody"],'
        ' "answers": [{"text": "x"}]}\n'
    )
    instances, report = load_qa_jsonl(src, toy_graph)
    assert len(instances) == 1
    assert len(instances[0].question_entities) == 1
    assert any("Nobody" in w["reason"] for w in report.warnings)


def test_load_qa_skips_fully_unresolvable_instance(toy_graph):
    src = (
        '{"id": "q1", "question": "?", "question_entities": ["Nobody"],'
        ' "answers": [{"text": "x"}]}\n'
    )
    instances, report = load_qa_jsonl(src, toy_graph)
    assert instances == []
    assert report.skipped == 1


def test_load_qa_malformed_lines_reported(toy_graph):
    src = 'not json\n{"id": "q"}\n'
    instances, report = load_qa_jsonl(src, toy_graph)
    assert instances == []
    assert report.skipped == 2
    assert [w["line_no"] for w in report.warnings] == [1, 2]


def test_load_qa_unlinked_answer_entity_warns(toy_graph):
    src = (
        '{"id": "q1", "question": "?", "question_entities": ["Mira Voss"],'
        ' "answers": [{"text": "y", "entity": "NoSuchPlace"}]}\n'
    )
    instances, report = load_qa_jsonl(src, toy_graph)
    assert len(instances) == 1
    assert instances[0].answers[0].entity is None
    assert any("NoSuchPlace" in w["reason"] for w in report.warnings)


def test_load_qa_bare_string_answers(toy_graph):
    src = (
        '{"id": "q1", "question": "?", "question_entities": ["Mira Voss"],'
        ' "answers": ["plain text"]}\n'
    )
    instances, _ = load_qa_jsonl(src, toy_graph)
    assert instances[0].answers[0] == Answer(text="plain text", entity=None)
