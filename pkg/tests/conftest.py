from __future__ import annotations

import pytest

from sie.toydata import load_toy


@pytest.fixture(scope="session")
def toy():
    """(graph, kg_report, instances, qa_report) for the built-in corpus."""
    return load_toy()


@pytest.fixture(scope="session")
def toy_graph(toy):
    return toy[0]


@pytest.fixture(scope="session")
def toy_instances(toy):
    return {inst.id: inst for inst in toy[2]}
