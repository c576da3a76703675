"""LOSR tree data model and its textual format.

A LOSR description is a typed tree: element nodes (sequence, event, entity,
spatial-relation, destination, measure) whose items are feature-value leaves
and child elements, kept in surface order.  The canonical single-line text
form is the comparison and storage key used throughout the pipeline; the
pretty form is display-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

SEQUENCE = "sequence"
EVENT = "event"
ENTITY = "entity"
SPATIAL_RELATION = "spatial-relation"
DESTINATION = "destination"
MEASURE = "measure"

LABELS = frozenset({SEQUENCE, EVENT, ENTITY, SPATIAL_RELATION, DESTINATION, MEASURE})

# Feature inventory.  Chunkable features are the only ones the chunker may
# emit; id and reference-id are assigned by annotation or anaphora resolution.
CHUNKABLE_FEATURES = ("action", "type", "color", "indicator", "relation", "cardinal", "reference")
FEATURES = frozenset(CHUNKABLE_FEATURES) | {"id", "reference-id"}
INT_FEATURES = frozenset({"cardinal", "id", "reference-id"})

ACTIONS = frozenset({"take", "drop", "move"})
TYPES = frozenset({"cube", "prism", "stack", "tile", "corner", "edge", "board", "region", "reference"})
COLORS = frozenset({"red", "green", "blue", "cyan", "yellow", "magenta", "white", "gray"})
RELATIONS = frozenset({"above", "below", "left", "right", "front", "behind", "adjacent", "within", "nearest"})
INDICATORS = frozenset({"left", "right", "front", "back", "top"})

VALUE_SETS = {
    "action": ACTIONS,
    "type": TYPES,
    "color": COLORS,
    "relation": RELATIONS,
    "indicator": INDICATORS,
}


class MalformedNodeError(ValueError):
    """A tree violates a structural rule; .rule names the violated rule."""

    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


class LosrParseError(ValueError):
    """Text does not parse as LOSR; .offset is the character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Feature:
    """A feature-value leaf, e.g. (color: cyan)."""

    name: str
    value: Union[str, int]

    @property
    def text(self) -> str:
        return f"({self.name}: {self.value})"


@dataclass(frozen=True)
class LosrNode:
    """An element node; items are features and children in surface order."""

    label: str
    items: tuple = ()

    @property
    def features(self) -> tuple:
        return tuple(i for i in self.items if isinstance(i, Feature))

    @property
    def children(self) -> tuple:
        return tuple(i for i in self.items if isinstance(i, LosrNode))

    def feature_values(self, name: str) -> list:
        return [f.value for f in self.features if f.name == name]

    def feature_value(self, name: str):
        """First value for the named feature, or None."""
        for f in self.items:
            if isinstance(f, Feature) and f.name == name:
                return f.value
        return None

    @property
    def text(self) -> str:
        """Canonical single-line form (cached; nodes are immutable)."""
        cached = self.__dict__.get("_text")
        if cached is None:
            cached = "(%s: %s)" % (self.label, " ".join(i.text for i in self.items))
            object.__setattr__(self, "_text", cached)
        return cached


Item = Union[Feature, LosrNode]


def check_value(name: str, value) -> None:
    if name in INT_FEATURES:
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise MalformedNodeError("integer-value", f"{name} requires a positive integer, got {value!r}")
        return
    allowed = VALUE_SETS.get(name)
    if allowed is None:
        raise MalformedNodeError("unknown-feature", f"unknown feature {name!r}")
    if value not in allowed:
        raise MalformedNodeError("value-set", f"{value!r} is not a valid {name} value")


def check_node(node: LosrNode) -> None:
    """Validate the full tree; raises MalformedNodeError naming the rule."""
    if not isinstance(node, LosrNode):
        raise MalformedNodeError("not-a-node", f"expected LosrNode, got {type(node).__name__}")
    if node.label not in LABELS:
        raise MalformedNodeError("unknown-label", f"unknown element label {node.label!r}")
    for item in node.items:
        if isinstance(item, Feature):
            check_value(item.name, item.value)
        elif isinstance(item, LosrNode):
            check_node(item)
        else:
            raise MalformedNodeError("bad-item", f"item {item!r} is neither feature nor node")
    feats = node.features
    kids = node.children
    label = node.label
    if label == SEQUENCE:
        if feats:
            raise MalformedNodeError("sequence-features", "sequence carries no features")
        if len(kids) < 2 or any(k.label != EVENT for k in kids):
            raise MalformedNodeError("sequence-children", "sequence requires >=2 event children")
    elif label == EVENT:
        if len(feats) != 1 or feats[0].name != "action":
            raise MalformedNodeError("event-action", "event carries exactly one action feature")
        if any(k.label not in (ENTITY, DESTINATION) for k in kids):
            raise MalformedNodeError("event-children", "event children are entities or destinations")
    elif label == ENTITY:
        if not feats:
            raise MalformedNodeError("entity-features", "entity carries at least one feature")
        if len([f for f in feats if f.name == "type"]) > 1:
            raise MalformedNodeError("entity-type", "entity carries at most one type feature")
        if any(k.label != SPATIAL_RELATION for k in kids):
            raise MalformedNodeError("entity-children", "entity children are spatial-relations only")
    elif label == SPATIAL_RELATION:
        if len(feats) != 1 or feats[0].name != "relation":
            raise MalformedNodeError("relation-feature", "spatial-relation carries exactly one relation feature")
        labels = [k.label for k in kids]
        if any(l not in (MEASURE, ENTITY) for l in labels) or labels.count(MEASURE) > 1 or labels.count(ENTITY) > 1:
            raise MalformedNodeError("relation-children", "spatial-relation takes at most one measure and one entity")
    elif label == DESTINATION:
        if feats:
            raise MalformedNodeError("destination-features", "destination carries no features")
        if len(kids) != 1 or kids[0].label != SPATIAL_RELATION:
            raise MalformedNodeError("destination-children", "destination has exactly one spatial-relation child")
    elif label == MEASURE:
        names = sorted(f.name for f in feats)
        if names != ["cardinal", "type"]:
            raise MalformedNodeError("measure-features", "measure carries one cardinal and one type feature")
        if kids:
            raise MalformedNodeError("measure-children", "measure has no children")


def serialize(node: LosrNode, pretty: bool = False) -> str:
    """Render the canonical text; pretty gives one item per line."""
    check_node(node)
    if not pretty:
        return node.text
    return "\n".join(_pretty_lines(node, 0))


def _pretty_lines(node: LosrNode, depth: int) -> list:
    pad = "  " * depth
    lines = [f"{pad}({node.label}:"]
    for item in node.items:
        if isinstance(item, Feature):
            lines.append(f"{pad}  {item.text}")
        else:
            lines.extend(_pretty_lines(item, depth + 1))
    lines[-1] += ")"
    return lines


def deserialize(text: str) -> LosrNode:
    """Parse LOSR text (whitespace-insensitive between tokens)."""
    parser = _Parser(text)
    item = parser.parse_item()
    parser.skip_ws()
    if parser.pos != len(text):
        raise LosrParseError("trailing content after tree", parser.pos)
    if isinstance(item, Feature):
        raise LosrParseError("top-level item must be an element, not a feature", 0)
    check_node(item)
    return item


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def fail(self, message: str):
        raise LosrParseError(message, self.pos)

    def parse_item(self) -> Item:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != "(":
            self.fail("expected '('")
        self.pos += 1
        self.skip_ws()
        name = self.read_word()
        if not name:
            self.fail("expected a name")
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ":":
            self.fail("expected ':' after name")
        self.pos += 1
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            if name not in LABELS:
                if name in FEATURES:
                    self.fail(f"feature {name!r} takes a plain value, not sub-items")
                self.fail(f"unknown label {name!r}")
            items = []
            while True:
                items.append(self.parse_item())
                self.skip_ws()
                if self.pos < len(self.text) and self.text[self.pos] == ")":
                    self.pos += 1
                    return LosrNode(name, tuple(items))
                if self.pos >= len(self.text):
                    self.fail("unbalanced parentheses")
        else:
            if name not in FEATURES:
                if name in LABELS:
                    self.fail(f"element {name!r} requires sub-items")
                self.fail(f"unknown feature {name!r}")
            start = self.pos
            word = self.read_word()
            if not word:
                self.fail("expected a value")
            if name in INT_FEATURES:
                if not word.isdigit() or int(word) < 1:
                    raise LosrParseError(f"{name} requires a positive integer", start)
                value: Union[str, int] = int(word)
            else:
                if word not in VALUE_SETS[name]:
                    raise LosrParseError(f"{word!r} is not a valid {name} value", start)
                value = word
            self.skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != ")":
                self.fail("expected ')' after value")
            self.pos += 1
            return Feature(name, value)

    def read_word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "-"):
            self.pos += 1
        return self.text[start:self.pos]


def leaf_values(node: LosrNode) -> list:
    """Pre-order feature values, excluding id and reference-id.

    These are the lexicon-weighted constants used for scoring; ids have no
    lexical realization.
    """
    out: list = []
    for item in node.items:
        if isinstance(item, Feature):
            if item.name not in ("id", "reference-id"):
                out.append(item.value)
        else:
            out.extend(leaf_values(item))
    return out


def equals_exact(a: LosrNode, b: LosrNode) -> bool:
    """True iff the canonical serializations are identical."""
    return a.text == b.text


def iter_nodes(node: LosrNode, path: tuple = ()) -> Iterator[tuple]:
    """Yield (path, node) pairs in pre-order; paths index into .items."""
    yield path, node
    for i, item in enumerate(node.items):
        if isinstance(item, LosrNode):
            yield from iter_nodes(item, path + (i,))


def item_at(node: LosrNode, path) -> Item:
    """Resolve an item-index path; the last step may land on a feature."""
    current: Item = node
    for step in path:
        if not isinstance(current, LosrNode):
            raise IndexError(f"path {path!r} descends through a feature")
        current = current.items[step]
    return current


def chunk_feature(feature: Feature) -> str:
    """Chunk tag for a feature leaf.

    The anaphoric (type: reference) leaf is tagged as a reference chunk;
    every other leaf keeps its feature name.
    """
    if feature.name == "type" and feature.value == "reference":
        return "reference"
    return feature.name


def tree_feature(chunk_feature_name: str) -> str:
    """Tree-side feature name for a chunk tag (reference chunks are type leaves)."""
    return "type" if chunk_feature_name == "reference" else chunk_feature_name


def strip_ids(node: LosrNode) -> LosrNode:
    """Copy of the tree without id / reference-id features."""
    items = []
    for item in node.items:
        if isinstance(item, Feature):
            if item.name not in ("id", "reference-id"):
                items.append(item)
        else:
            items.append(strip_ids(item))
    return LosrNode(node.label, tuple(items))
