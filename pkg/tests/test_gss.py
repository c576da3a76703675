"""Graph-structured-stack parsing: shifting, packing, pruning, ellipsis."""

from collections import Counter

import pytest

from losr import gss
from losr import lexicon as lex
from losr.chunker import Chunk
from losr.trees import strip_ids
from losr.world import Shape, WorldModel


def ch(feature, *words, start=0):
    return Chunk(feature, start, start + len(words), tuple(words))


def chunk_line(*specs):
    """Chunks from (feature, words...) specs with consistent token spans."""
    chunks = []
    pos = 0
    for feature, *words in specs:
        chunks.append(Chunk(feature, pos, pos + len(words), tuple(words)))
        pos += len(words)
    return chunks


LEXICON = lex.Lexicon(Counter({
    ("take", "action", "take"): 1,
    ("move", "action", "move"): 1,
    ("drop", "action", "drop"): 1,
    ("green", "color", "green"): 1,
    ("red", "color", "red"): 1,
    ("blue", "color", "blue"): 2,
    ("blue", "color", "cyan"): 1,
    ("cube", "type", "cube"): 1,
    ("on", "relation", "above"): 1,
    ("it", "reference", "reference"): 1,
}))

P = lex.Production
BASE_GRAMMAR = lex.Grammar([
    P("event", ("action", "entity")),
    P("event", ("action", "entity", "destination")),
    P("entity", ("type",)),
    P("entity", ("color", "type")),
    P("spatial-relation", ("relation", "entity")),
    P("destination", ("spatial-relation",)),
    P("sequence", ("event", "event")),
])
ATTACH_GRAMMAR = lex.Grammar(
    BASE_GRAMMAR.productions + [P("entity", ("type", "spatial-relation"))])
NO_RULES = lex.EllipsisRules({})
DROP_RULES = lex.EllipsisRules({("action", "relation"): lex.ELLIPSIS_TEMPLATE})

WORLD = WorldModel(shapes=frozenset({
    Shape("cube", "red", 0, 0, 0),
    Shape("cube", "blue", 0, 0, 1),
}))

TAKE_BLUE = chunk_line(("action", "take"), ("color", "blue"), ("type", "cube"))
TAKE_GREEN = chunk_line(("action", "take"), ("color", "green"), ("type", "cube"))
TAKE_IT = chunk_line(("action", "take"), ("reference", "it"))
MOVE_AMBIG = chunk_line(("action", "move"), ("type", "cube"),
                        ("relation", "on"), ("color", "red"), ("type", "cube"))
ELIDED = chunk_line(("action", "take"), ("type", "cube"), ("action", "drop"),
                    ("relation", "on"), ("color", "red"), ("type", "cube"))


def parse(chunks, grammar=BASE_GRAMMAR, rules=NO_RULES, world=WORLD,
          mode=gss.EXHAUSTIVE):
    return gss.parse(chunks, LEXICON, grammar, rules, world, mode)


class TestShift:
    def test_one_vertex_per_sense_heaviest_first(self):
        state = gss.GssState(TAKE_BLUE, LEXICON, BASE_GRAMMAR, NO_RULES,
                             WORLD, gss.EXHAUSTIVE)
        gss.shift(state)  # take
        gss.shift(state)  # blue
        blues = [state.vertices[v] for v in state.frontiers[-1]
                 if state.vertices[v].symbol == "color"]
        assert [v.item.value for v in blues] == ["blue", "cyan"]
        assert [v.weights for v in blues] == [(pytest.approx(2 / 3),),
                                              (pytest.approx(1 / 3),)]

    def test_sense_weights_multiply_into_scores(self):
        forest = parse(TAKE_BLUE)
        by_color = {t.tree.children[0].feature_value("color"): t.score
                    for t in forest.trees}
        assert by_color["blue"] == pytest.approx(2 / 3)
        assert by_color["cyan"] == pytest.approx(1 / 3)

    def test_oov_chunk_raises(self):
        bad = chunk_line(("action", "take"), ("color", "mauve"), ("type", "cube"))
        with pytest.raises(lex.OovError) as info:
            parse(bad)
        assert info.value.phrase == "mauve"


class TestModes:
    def test_pruned_requires_world(self):
        with pytest.raises(ValueError, match="pruned mode requires a world"):
            gss.parse(TAKE_BLUE, LEXICON, BASE_GRAMMAR, NO_RULES, None, gss.PRUNED)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="unknown parse mode"):
            gss.parse(TAKE_BLUE, LEXICON, BASE_GRAMMAR, NO_RULES, WORLD, "bogus")

    def test_exhaustive_without_world_is_fine(self):
        forest = gss.parse(TAKE_BLUE, LEXICON, BASE_GRAMMAR, NO_RULES,
                           None, gss.EXHAUSTIVE)
        assert len(forest.trees) == 2


class TestPruning:
    def test_ungroundable_entity_discarded(self):
        pruned = parse(TAKE_GREEN, mode=gss.PRUNED)
        exhaustive = parse(TAKE_GREEN, mode=gss.EXHAUSTIVE)
        assert exhaustive.texts() == [
            "(event: (action: take) (entity: (color: green) (type: cube)))"]
        assert pruned.trees == []
        assert pruned.stats.entities_pruned == 1
        assert exhaustive.stats.entities_pruned == 0
        assert pruned.stats.vertices < exhaustive.stats.vertices

    def test_groundable_ambiguity_survives_pruning(self):
        pruned = parse(MOVE_AMBIG, ATTACH_GRAMMAR, mode=gss.PRUNED)
        exhaustive = parse(MOVE_AMBIG, ATTACH_GRAMMAR, mode=gss.EXHAUSTIVE)
        assert pruned.texts() == exhaustive.texts()
        assert len(pruned.trees) == 2

    def test_sense_level_pruning_keeps_scene_colors(self):
        # Only the blue cube exists, so the cyan sense of "blue" dies.
        pruned = parse(TAKE_BLUE, mode=gss.PRUNED)
        assert pruned.texts() == [
            "(event: (action: take) (entity: (color: blue) (type: cube)))"]
        assert pruned.stats.entities_pruned == 1

    def test_reference_entities_exempt(self):
        forest = parse(TAKE_IT, mode=gss.PRUNED)
        assert forest.texts() == [
            "(event: (action: take) (entity: (type: reference)))"]
        assert forest.stats.entities_pruned == 0


class TestAttachmentForest:
    def test_both_attachments_packed(self):
        forest = parse(MOVE_AMBIG, ATTACH_GRAMMAR)
        entity_attach = ("(event: (action: move) (entity: (type: cube)"
                         " (spatial-relation: (relation: above)"
                         " (entity: (color: red) (type: cube)))))")
        destination = ("(event: (action: move) (entity: (type: cube))"
                       " (destination: (spatial-relation: (relation: above)"
                       " (entity: (color: red) (type: cube)))))")
        assert forest.texts() == sorted([entity_attach, destination])

    def test_shared_subtree_is_one_vertex(self):
        forest = parse(MOVE_AMBIG, ATTACH_GRAMMAR)
        state = forest.state
        sr_text = ("(spatial-relation: (relation: above)"
                   " (entity: (color: red) (type: cube)))")
        vertices = [v for v in state.vertices.values() if v.text == sr_text]
        assert len(vertices) == 1

    def test_no_duplicate_text_span_vertices(self):
        for chunks, grammar in ((TAKE_BLUE, BASE_GRAMMAR),
                                (MOVE_AMBIG, ATTACH_GRAMMAR),
                                (ELIDED, BASE_GRAMMAR)):
            forest = gss.parse(chunks, LEXICON, grammar, DROP_RULES,
                               WORLD, gss.EXHAUSTIVE)
            state = forest.state
            keys = [(v.text, v.span_start, v.span_end)
                    for vid, v in state.vertices.items() if vid != 0]
            assert len(keys) == len(set(keys))
            assert len(state.dedup) == len(state.order) - 1


class TestEllipsis:
    EXPECTED = ("(sequence: (event: (action: take) (entity: (type: cube)))"
                " (event: (action: drop) (entity: (type: reference))"
                " (destination: (spatial-relation: (relation: above)"
                " (entity: (color: red) (type: cube))))))")

    def test_unspoken_reference_inserted(self):
        forest = parse(ELIDED, rules=DROP_RULES, mode=gss.PRUNED)
        assert forest.texts() == [self.EXPECTED]

    def test_inserted_vertex_has_weight_one(self):
        forest = parse(ELIDED, rules=DROP_RULES, mode=gss.PRUNED)
        state = forest.state
        vid = state.dedup[(lex.ELLIPSIS_TEMPLATE.text, 3, 3)]
        assert state.vertices[vid].weights == (1.0,)
        # The parse score is the product of the spoken senses and the 1.0.
        assert forest.trees[0].score == pytest.approx(1.0)

    def test_without_rule_no_parse(self):
        forest = parse(ELIDED, rules=NO_RULES, mode=gss.EXHAUSTIVE)
        assert forest.trees == []

    def test_rule_context_must_match(self):
        # Rule keyed on (type, relation) never fires after an action chunk.
        rules = lex.EllipsisRules({("type", "relation"): lex.ELLIPSIS_TEMPLATE})
        forest = parse(ELIDED, rules=rules, mode=gss.EXHAUSTIVE)
        assert forest.trees == []


class TestStateBookkeeping:
    def test_bottom_vertex(self):
        forest = parse(TAKE_BLUE)
        bottom = forest.state.vertices[0]
        assert (bottom.vid, bottom.text, bottom.successors) == (0, "-", [])
        assert bottom.symbol is None and bottom.item is None

    def test_frontier_count(self):
        forest = parse(TAKE_BLUE)
        assert len(forest.state.frontiers) == len(TAKE_BLUE) + 1
        elided = parse(ELIDED, rules=DROP_RULES, mode=gss.PRUNED)
        assert len(elided.state.frontiers) == len(ELIDED) + 2  # one insertion

    def test_stats_populated(self):
        forest = parse(MOVE_AMBIG, ATTACH_GRAMMAR)
        stats = forest.stats
        assert stats.vertices == len(forest.state.order) - 1
        assert stats.reductions_attempted > 0
        assert stats.elapsed > 0


class TestDump:
    def test_one_line_per_vertex(self):
        forest = parse(TAKE_BLUE)
        lines = gss.dump(forest.state).splitlines()
        assert len(lines) == len(forest.state.order)
        assert lines[0] == "0\t0\t-\t"
        for line in lines:
            assert len(line.split("\t")) == 4

    def test_dump_shows_sense_vertices(self):
        forest = parse(TAKE_BLUE)
        text = gss.dump(forest.state)
        assert "\t(color: blue)\t" in text
        assert "\t(color: cyan)\t" in text


class TestAcceptedParses:
    def test_partial_coverage_rejected(self):
        # "take cube drop" leaves the trailing action unconsumed.
        chunks = chunk_line(("action", "take"), ("type", "cube"), ("action", "drop"))
        forest = parse(chunks)
        assert forest.trees == []

    def test_sorted_by_text(self):
        forest = parse(MOVE_AMBIG, ATTACH_GRAMMAR)
        texts = forest.texts()
        assert texts == sorted(texts)

    def test_gold_tree_in_exhaustive_forest(self, small_corpus, small_artifacts):
        for record in small_corpus[:10]:
            forest = gss.parse(record.gold_chunks(), small_artifacts.lexicon,
                               small_artifacts.grammar, small_artifacts.ellipsis,
                               record.scene_before, gss.EXHAUSTIVE)
            assert strip_ids(record.gold).text in forest.texts()
