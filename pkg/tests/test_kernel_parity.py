"""The compiled Viterbi kernel and the pure-Python fallback must agree
bit for bit: same tags, same scores, same tie-breaks, same failures."""

import random

import numpy as np
import pytest

import oracle_viterbi
from losr import _viterbi_py, chunker

compiled = pytest.importorskip(
    "losr._viterbi", reason="compiled kernel not built in this environment")


def random_model(rng):
    """A small trained model over random sentences, so tables are realistic
    (legality-masked, partly -inf)."""
    words = ["w%d" % i for i in range(rng.randint(3, 8))]
    features = ["color", "type", "relation", "action"]
    sentences = []
    for _ in range(rng.randint(2, 6)):
        tokens, tags = [], []
        previous = "O"
        for _ in range(rng.randint(1, 7)):
            tokens.append(rng.choice(words))
            if previous.startswith(("B-", "I-")) and rng.random() < 0.35:
                tags.append("I-" + previous[2:])
            elif rng.random() < 0.3:
                tags.append("O")
            else:
                tags.append("B-" + rng.choice(features))
            previous = tags[-1]
        sentences.append((tokens, tags))
    return chunker.train(sentences), words


def test_kernels_agree_on_random_inputs():
    rng = random.Random(31)
    for _ in range(400):
        model, words = random_model(rng)
        tokens = [rng.choice(words + ["unseen"]) for _ in range(rng.randint(1, 7))]
        trans, stop = model.decode_tables()
        emit = model.emission_table(tokens)
        try:
            py_tags, py_score = _viterbi_py.decode(trans, stop, emit)
        except ValueError:
            with pytest.raises(ValueError):
                compiled.decode(trans, stop, emit)
            continue
        c_tags, c_score = compiled.decode(trans, stop, emit)
        assert list(c_tags) == list(py_tags)
        assert c_score == py_score  # bitwise float equality, not approx


def test_kernels_raise_identically_when_no_path_is_admissible():
    # 'b' was only ever seen inside a color chunk, so at sentence start no
    # tag assignment is possible at all.
    model = chunker.train([(["a", "b"], ["B-color", "I-color"])])
    trans, stop = model.decode_tables()
    emit = model.emission_table(["b"])
    for kernel in (compiled, _viterbi_py):
        with pytest.raises(ValueError, match="no admissible tag sequence"):
            kernel.decode(trans, stop, emit)


def test_kernels_agree_with_brute_force():
    rng = random.Random(77)
    for _ in range(60):
        model, words = random_model(rng)
        tokens = [rng.choice(words) for _ in range(rng.randint(1, 5))]
        trans, stop = model.decode_tables()
        emit = model.emission_table(tokens)
        try:
            want_tags, want_score = oracle_viterbi.brute_force_decode(trans, stop, emit)
        except ValueError:
            for kernel in (compiled, _viterbi_py):
                with pytest.raises(ValueError):
                    kernel.decode(trans, stop, emit)
            continue
        for kernel in (compiled, _viterbi_py):
            got_tags, got_score = kernel.decode(trans, stop, emit)
            assert list(got_tags) == list(want_tags)
            assert got_score == want_score


def test_tie_break_prefers_smaller_tags_from_the_end():
    # Two tags, symmetric tables: every length-2 sequence scores the same.
    # The winner must read smallest from the end: (0, 0).
    T = len(chunker.TAGS)
    trans = np.zeros((T + 1, T + 1, T))
    stop = np.zeros((T + 1, T))
    emit = np.zeros((2, T))
    for kernel in (compiled, _viterbi_py):
        tags, score = kernel.decode(trans, stop, emit)
        assert list(tags) == [0, 0]
        assert score == 0.0


def test_active_kernel_is_the_compiled_one():
    # The environment builds the extension; the import should have picked it.
    assert chunker.KERNEL_NAME == "cython"
