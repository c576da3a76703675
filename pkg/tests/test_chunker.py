"""IOB2 chunker: alignment projection, HMM training, exact decoding."""

import math
import random

import numpy as np
import pytest

import oracle_viterbi
from losr import chunker
from losr.chunker import (
    AlignmentError,
    Chunk,
    ChunkError,
    TAGS,
    TAG_INDEX,
    UNKNOWN_RESERVE,
    aligned_tree_to_iob2,
    extract_chunks,
    load_model,
    save_model,
    tag,
    tag_is_legal,
    train,
)
from losr.trees import deserialize


TINY = [
    (["take", "the", "red", "cube"], ["B-action", "O", "B-color", "B-type"]),
    (["take", "the", "blue", "cube"], ["B-action", "O", "B-color", "B-type"]),
    (["pick", "up", "the", "red", "prism"], ["B-action", "I-action", "O", "B-color", "B-type"]),
    (["put", "it", "on", "the", "cube"], ["B-action", "B-reference", "B-relation", "O", "B-type"]),
    (["take", "the", "cube", "in", "front", "of", "the", "prism"],
     ["B-action", "O", "B-type", "B-relation", "I-relation", "I-relation", "O", "B-type"]),
]


class TestTagInventory:
    def test_fifteen_tags(self):
        assert len(TAGS) == 15
        assert TAGS[0] == "O"
        assert {t[:2] for t in TAGS[1:]} == {"B-", "I-"}

    def test_legality(self):
        assert tag_is_legal("B-relation", "I-relation")
        assert tag_is_legal("I-relation", "I-relation")
        assert not tag_is_legal("O", "I-relation")
        assert not tag_is_legal("B-color", "I-relation")
        assert tag_is_legal("O", "B-relation")
        assert tag_is_legal("I-color", "O")


class TestAlignmentProjection:
    TREE = deserialize("(event: (action: take) (entity: (color: red) (type: cube)))")

    def test_projects_spans_to_tags(self):
        tokens = ["pick", "up", "the", "red", "cube"]
        alignment = (((0,), (0, 2)), ((1, 0), (3, 4)), ((1, 1), (4, 5)))
        assert aligned_tree_to_iob2(tokens, self.TREE, alignment) == [
            "B-action", "I-action", "O", "B-color", "B-type"]

    def test_rejects_overlaps(self):
        alignment = (((0,), (0, 2)), ((1, 0), (1, 3)), ((1, 1), (4, 5)))
        with pytest.raises(AlignmentError, match="overlapping"):
            aligned_tree_to_iob2(["a"] * 5, self.TREE, alignment)

    def test_rejects_out_of_bounds(self):
        with pytest.raises(AlignmentError, match="out of bounds"):
            aligned_tree_to_iob2(["a"], self.TREE, (((0,), (0, 2)),))

    def test_rejects_non_leaf_paths(self):
        with pytest.raises(AlignmentError):
            aligned_tree_to_iob2(["a", "b"], self.TREE, (((1,), (0, 1)),))

    def test_rejects_id_leaves(self):
        tree = deserialize("(event: (action: take) (entity: (id: 1) (type: cube)))")
        with pytest.raises(AlignmentError, match="no surface realization"):
            aligned_tree_to_iob2(["a", "b"], tree, (((1, 0), (0, 1)),))

    def test_reference_leaf_gets_reference_tag(self):
        tree = deserialize("(event: (action: drop) (entity: (type: reference)))")
        tags = aligned_tree_to_iob2(["drop", "it"], tree, (((0,), (0, 1)), ((1, 0), (1, 2))))
        assert tags == ["B-action", "B-reference"]


class TestExtractChunks:
    def test_collapses_maximal_spans(self):
        tokens = ["pick", "up", "the", "red", "cube"]
        tags = ["B-action", "I-action", "O", "B-color", "B-type"]
        assert extract_chunks(tokens, tags) == [
            Chunk("action", 0, 2, ("pick", "up")),
            Chunk("color", 3, 4, ("red",)),
            Chunk("type", 4, 5, ("cube",)),
        ]

    def test_adjacent_begins_split_chunks(self):
        chunks = extract_chunks(["back", "right"], ["B-indicator", "B-indicator"])
        assert [c.words for c in chunks] == [("back",), ("right",)]

    def test_phrase_joins_words(self):
        chunk = extract_chunks(["in", "front", "of"], ["B-relation", "I-relation", "I-relation"])[0]
        assert chunk.phrase == "in front of"

    def test_rejects_illegal_inside_tag(self):
        with pytest.raises(ChunkError, match="illegal"):
            extract_chunks(["a", "b"], ["O", "I-color"])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ChunkError):
            extract_chunks(["a"], ["O", "O"])


class TestTraining:
    def test_interpolation_weights_sum_to_one(self):
        model = train(TINY)
        assert math.isclose(sum(model.lambdas), 1.0, rel_tol=1e-9)
        assert all(l >= 0 for l in model.lambdas)

    def test_known_word_emissions_are_unsmoothed(self):
        model = train(TINY)
        # 'cube' is always B-type in training, so other tags stay impossible.
        emit = model.emission_table(["cube"])
        assert emit[0, TAG_INDEX["B-type"]] > float("-inf")
        assert emit[0, TAG_INDEX["B-color"]] == float("-inf")

    def test_unknown_words_draw_on_the_hapax_reserve(self):
        model = train(TINY)
        # The reserve is positive for every tag, so an unknown word can take
        # any of them; known words get no such smoothing.
        assert UNKNOWN_RESERVE > 0
        emit = model.emission_table(["zzyzx"])
        assert np.isfinite(emit[0]).all()

    def test_transition_tables_mask_illegal_successors(self):
        model = train(TINY)
        trans, stop = model.decode_tables()
        o, b_col, i_col = TAG_INDEX["O"], TAG_INDEX["B-color"], TAG_INDEX["I-color"]
        assert trans.shape == (16, 16, 15) and stop.shape == (16, 15)
        # I-color directly after O is illegal whatever the counts say...
        assert trans[o, o, i_col] == float("-inf")
        # ...while a legal-but-unseen transition still gets interpolated mass.
        assert trans[o, b_col, TAG_INDEX["B-type"]] > float("-inf")


class TestDecoding:
    def test_tags_training_sentences(self):
        model = train(TINY)
        for tokens, tags_true in TINY:
            assert tag(model, tokens) == tags_true

    def test_decoding_is_deterministic(self):
        model = train(TINY)
        tokens = ["take", "the", "zzyzx", "cube"]
        assert tag(model, tokens) == tag(model, tokens)

    def test_undecodable_sentence_raises_chunk_error(self):
        # 'front' only ever occurs inside a longer relation chunk here, so a
        # sentence that would need it in another position has no admissible
        # sequence: every path requires an emission the data never exhibited.
        model = train([
            (["take", "the", "cube", "in", "front", "of", "the", "prism"],
             ["B-action", "O", "B-type", "B-relation", "I-relation", "I-relation", "O", "B-type"]),
        ])
        with pytest.raises(ChunkError):
            tag(model, ["front", "take"])

    def test_matches_brute_force_on_random_sentences(self):
        model = train(TINY)
        vocab = sorted(model.vocab) + ["zzyzx"]
        rng = random.Random(3)
        for _ in range(120):
            tokens = [rng.choice(vocab) for _ in range(rng.randint(1, 6))]
            try:
                got = tag(model, tokens)
            except ChunkError:
                got = None
            try:
                want = oracle_viterbi.brute_force_tags(model, tokens)
            except ValueError:
                want = None
            assert got == want, tokens


class TestPersistence:
    def test_save_load_round_trip_is_exact(self, tmp_path):
        model = train(TINY)
        path = tmp_path / "model.hmm"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.lambdas == model.lambdas
        assert loaded.trigram == model.trigram
        assert loaded.emission == model.emission
        assert loaded.vocab == model.vocab
        assert loaded.hapax == model.hapax
        # Behavioral equality: identical tables, bit for bit.
        tokens = ["take", "the", "zzyzx", "cube"]
        t1, s1 = model.decode_tables()
        t2, s2 = loaded.decode_tables()
        assert np.array_equal(t1, t2) and np.array_equal(s1, s2)
        assert np.array_equal(model.emission_table(tokens), loaded.emission_table(tokens))

    def test_rejects_unknown_format(self, tmp_path):
        path = tmp_path / "model.hmm"
        path.write_text("some-other-format 9\n")
        with pytest.raises(ChunkError):
            load_model(path)


def test_trained_tagger_recovers_gold_chunks_on_most_training_data(std_corpus, artifacts):
    hits = 0
    for record in std_corpus:
        tags = tag(artifacts.model, list(record.tokens))
        if extract_chunks(list(record.tokens), tags) == record.gold_chunks():
            hits += 1
    assert hits / len(std_corpus) > 0.97
