"""Shared fixtures: generated corpora and trained artifacts.

Session scope keeps the expensive pieces (corpus generation, artifact
training) to one build per run; every fixture is seeded, so the whole
suite is deterministic.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from losr import corpus, service  # noqa: E402


@pytest.fixture(scope="session")
def std_corpus():
    """Standard profile: realistic mix plus blue/cyan ambiguity templates."""
    return corpus.generate_corpus(300, "standard", seed=13)


@pytest.fixture(scope="session")
def clean_corpus():
    """Ambiguity- and OOV-free profile."""
    return corpus.generate_corpus(300, "clean", seed=13)


@pytest.fixture(scope="session")
def artifacts(std_corpus):
    return corpus.train_artifacts(std_corpus)


@pytest.fixture(scope="session")
def small_corpus():
    return corpus.generate_corpus(80, "standard", seed=5)


@pytest.fixture(scope="session")
def small_artifacts(small_corpus):
    return corpus.train_artifacts(small_corpus)


@pytest.fixture()
def demo_scene():
    return service.DEMO_SCENE
