"""Tree data model: canonical text, validation, (de)serialization."""

import pytest
from hypothesis import given, strategies as st

from losr.trees import (
    CHUNKABLE_FEATURES,
    ENTITY,
    Feature,
    LosrNode,
    LosrParseError,
    MalformedNodeError,
    chunk_feature,
    check_node,
    deserialize,
    equals_exact,
    item_at,
    iter_nodes,
    leaf_values,
    serialize,
    strip_ids,
    tree_feature,
)


def ent(*items):
    return LosrNode("entity", tuple(items))


RED_CUBE = ent(Feature("color", "red"), Feature("type", "cube"))
TAKE = LosrNode("event", (Feature("action", "take"), RED_CUBE))


class TestCanonicalText:
    def test_feature_text(self):
        assert Feature("color", "cyan").text == "(color: cyan)"

    def test_node_text_single_line(self):
        assert RED_CUBE.text == "(entity: (color: red) (type: cube))"

    def test_items_keep_surface_order(self):
        reversed_ent = ent(Feature("type", "cube"), Feature("color", "red"))
        assert reversed_ent.text == "(entity: (type: cube) (color: red))"
        assert not equals_exact(RED_CUBE, reversed_ent)

    def test_text_is_cached_per_node(self):
        node = ent(Feature("type", "cube"))
        assert node.text is node.text

    def test_pretty_form_one_item_per_line(self):
        text = serialize(TAKE, pretty=True)
        assert text.splitlines() == [
            "(event:",
            "  (action: take)",
            "  (entity:",
            "    (color: red)",
            "    (type: cube)))",
        ]


class TestValidation:
    def test_unknown_label(self):
        with pytest.raises(MalformedNodeError) as err:
            check_node(LosrNode("clause", (Feature("action", "take"),)))
        assert err.value.rule == "unknown-label"

    def test_unknown_feature_value(self):
        with pytest.raises(MalformedNodeError) as err:
            check_node(ent(Feature("color", "chartreuse")))
        assert err.value.rule == "value-set"

    def test_cardinal_must_be_positive_int(self):
        for bad in (0, -2, "two", True):
            with pytest.raises(MalformedNodeError):
                check_node(LosrNode("measure", (Feature("cardinal", bad), Feature("type", "tile"))))

    def test_sequence_needs_two_events(self):
        with pytest.raises(MalformedNodeError) as err:
            check_node(LosrNode("sequence", (TAKE,)))
        assert err.value.rule == "sequence-children"

    def test_event_needs_exactly_one_action(self):
        with pytest.raises(MalformedNodeError):
            check_node(LosrNode("event", (RED_CUBE,)))
        with pytest.raises(MalformedNodeError):
            check_node(LosrNode("event", (Feature("action", "take"), Feature("action", "drop"))))

    def test_entity_allows_one_type_at_most(self):
        with pytest.raises(MalformedNodeError) as err:
            check_node(ent(Feature("type", "cube"), Feature("type", "prism")))
        assert err.value.rule == "entity-type"

    def test_entity_requires_a_feature(self):
        with pytest.raises(MalformedNodeError) as err:
            check_node(LosrNode("entity", ()))
        assert err.value.rule == "entity-features"

    def test_spatial_relation_at_most_one_measure_and_entity(self):
        measure = LosrNode("measure", (Feature("cardinal", 1), Feature("type", "tile")))
        with pytest.raises(MalformedNodeError):
            check_node(LosrNode("spatial-relation",
                                (Feature("relation", "left"), measure, measure, RED_CUBE)))

    def test_destination_wraps_exactly_one_relation(self):
        with pytest.raises(MalformedNodeError):
            check_node(LosrNode("destination", (RED_CUBE,)))


class TestSerialization:
    def test_round_trip_is_exact(self):
        text = ("(sequence: (event: (action: take) (entity: (id: 1) (color: red) "
                "(type: cube))) (event: (action: drop) (entity: (type: reference) "
                "(reference-id: 1)) (destination: (spatial-relation: (relation: above) "
                "(entity: (type: board))))))")
        assert serialize(deserialize(text)) == text

    def test_whitespace_insensitive_between_tokens(self):
        spread = "( entity:   (color:  red)\n  (type: cube) )"
        assert deserialize(spread).text == RED_CUBE.text

    def test_error_carries_offset(self):
        with pytest.raises(LosrParseError) as err:
            deserialize("(entity: (color: octarine))")
        assert err.value.offset == 17

    def test_rejects_trailing_content(self):
        with pytest.raises(LosrParseError):
            deserialize(RED_CUBE.text + " (type: cube)")

    def test_rejects_top_level_feature(self):
        with pytest.raises(LosrParseError):
            deserialize("(color: red)")

    def test_rejects_unbalanced(self):
        with pytest.raises(LosrParseError):
            deserialize("(entity: (color: red)")

    def test_rejects_malformed_deserialized_tree(self):
        with pytest.raises(MalformedNodeError):
            deserialize("(entity: (type: cube) (type: cube))")


class TestHelpers:
    def test_leaf_values_skip_ids(self):
        tree = deserialize("(event: (action: take) (entity: (id: 2) (color: red) (type: cube)))")
        assert leaf_values(tree) == ["take", "red", "cube"]

    def test_strip_ids(self):
        tree = deserialize("(event: (action: take) (entity: (id: 2) (color: red) (type: cube)))")
        assert strip_ids(tree).text == "(event: (action: take) (entity: (color: red) (type: cube)))"

    def test_iter_nodes_and_item_at_agree(self):
        for path, node in iter_nodes(TAKE):
            assert item_at(TAKE, path) is node

    def test_chunk_feature_maps_reference(self):
        assert chunk_feature(Feature("type", "reference")) == "reference"
        assert chunk_feature(Feature("type", "cube")) == "type"
        assert tree_feature("reference") == "type"
        for name in CHUNKABLE_FEATURES:
            if name != "reference":
                assert tree_feature(name) == name


# A generator of arbitrary *valid* trees, for the round-trip property.
_colors = st.sampled_from(["red", "green", "blue", "cyan", "yellow", "magenta", "white", "gray"])
_types = st.sampled_from(["cube", "prism", "stack", "tile", "corner", "edge", "board"])
_indicators = st.sampled_from(["left", "right", "front", "back", "top"])
_relations = st.sampled_from(["above", "below", "left", "right", "front", "behind",
                              "adjacent", "within", "nearest"])


def _entity_nodes(depth: int):
    base = st.builds(
        lambda cs, ins, t: LosrNode(ENTITY, tuple(
            [Feature("color", c) for c in cs]
            + [Feature("indicator", i) for i in ins]
            + [Feature("type", t)])),
        st.lists(_colors, max_size=2),
        st.lists(_indicators, max_size=2),
        _types,
    )
    if depth == 0:
        return base
    sr = st.builds(
        lambda rel, landmark: LosrNode("spatial-relation",
                                       (Feature("relation", rel), landmark)),
        _relations,
        _entity_nodes(depth - 1),
    )
    return st.builds(
        lambda node, srs: LosrNode(ENTITY, node.items + tuple(srs)),
        base,
        st.lists(sr, max_size=2),
    )


@given(_entity_nodes(2))
def test_serialize_deserialize_round_trip(tree):
    assert equals_exact(deserialize(serialize(tree)), tree)
