"""Small built-in corpus for tests, demos, and client integration runs.

The graph is a fictional book world wired to exercise the interesting
shapes: a diamond with two equal-length shortest paths (toy-3), a direct
edge shadowing a longer route (toy-2), an unlinked answer giving empty
support (toy-5), a partially resolvable entity list (toy-8), and a
high-degree hub for distractor pressure (toy-7 with the district fan).
"""

from __future__ import annotations

import json
import os

from .kg import KnowledgeGraph, LoadReport, load_triples
from .paths import QAInstance, QALoadReport, load_qa_jsonl

TOY_TRIPLES: list[tuple[str, str, str]] = [
    ("Mira Voss", "book.author.works_written", "The Glass Harbor"),
    ("Mira Voss", "book.author.works_written", "Salt Meridian"),
    ("The Glass Harbor", "book.written_work.publisher", "Tidewater Press"),
    ("Salt Meridian", "book.written_work.publisher", "Tidewater Press"),
    ("The Glass Harbor", "award.work.award_won", "Calder Prize"),
    ("Mira Voss", "people.person.place_of_birth", "Port Ellory"),
    ("Port Ellory", "location.city.country", "Veldania"),
    ("Mira Voss", "people.person.nationality", "Veldania"),
    ("Harbor Lights", "film.film.adapted_from", "The Glass Harbor"),
    ("Joun Reyes", "translation.translator.works", "Salt Meridian"),
    ("Anik Voss", "people.person.sibling", "Mira Voss"),
    ("Anik Voss", "people.person.education", "North Quay College"),
    ("Tidewater Press", "organization.organization.headquarters", "Port Ellory"),
    ("Calder Prize", "award.award.country", "Veldania"),
] + [
    (f"Port Ellory", "location.city.district", f"District {i:02d}") for i in range(1, 41)
]

TOY_QA: list[dict] = [
    {
        "id": "toy-1",
        "question": "Which publisher released The Glass Harbor?",
        "question_entities": ["The Glass Harbor"],
        "answers": [{"text": "Tidewater Press", "entity": "Tidewater Press"}],
        "n_hop": 2,
    },
    {
        "id": "toy-2",
        "question": "Which country is the author Mira Voss a citizen of?",
        "question_entities": ["Mira Voss"],
        "answers": [{"text": "Veldania", "entity": "Veldania"}],
        "n_hop": 2,
    },
    {
        "id": "toy-3",
        "question": "Which publisher works with the sibling of Anik Voss?",
        "question_entities": ["Anik Voss"],
        "answers": [{"text": "Tidewater Press", "entity": "Tidewater Press"}],
        "n_hop": 3,
    },
    {
        "id": "toy-4",
        "question": "Where is the publisher of Salt Meridian headquartered?",
        "question_entities": ["Salt Meridian"],
        "answers": [{"text": "Port Ellory", "entity": "Port Ellory"}],
        "n_hop": 2,
    },
    {
        "id": "toy-5",
        "question": "What dedication opens The Glass Harbor?",
        "question_entities": ["The Glass Harbor"],
        "answers": [{"text": "for the lighthouse keepers"}],
        "n_hop": 2,
    },
    {
        "id": "toy-6",
        "question": "Which country hosts the Calder Prize?",
        "question_entities": ["Calder Prize"],
        "answers": [{"text": "Veldania", "entity": "Veldania"}],
        "n_hop": 2,
    },
    {
        "id": "toy-7",
        "question": "Which country contains the city Port Ellory?",
        "question_entities": ["Port Ellory"],
        "answers": [{"text": "Veldania", "entity": "Veldania"}],
        "n_hop": 2,
    },
    {
        "id": "toy-8",
        "question": "Where was Mira Voss born?",
        "question_entities": ["Mira Voss", "Unknown Figure"],
        "answers": [{"text": "Port Ellory", "entity": "Port Ellory"}],
        "n_hop": 2,
    },
]


def kg_tsv() -> str:
    return "".join(f"{h}\t{r}\t{t}\n" for h, r, t in TOY_TRIPLES)


def qa_jsonl() -> str:
    return "".join(json.dumps(obj, ensure_ascii=False) + "\n" for obj in TOY_QA)


def write_corpus(out_dir: str) -> tuple[str, str]:
    """Write kg.tsv and qa.jsonl under out_dir; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    kg_path = os.path.join(out_dir, "kg.tsv")
    qa_path = os.path.join(out_dir, "qa.jsonl")
    with open(kg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(kg_tsv())
    with open(qa_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(qa_jsonl())
    return kg_path, qa_path


def load_toy() -> tuple[KnowledgeGraph, LoadReport, list[QAInstance], QALoadReport]:
    g, kg_report = load_triples(kg_tsv())
    instances, qa_report = load_qa_jsonl(qa_jsonl(), g)
    return g, kg_report, instances, qa_report
