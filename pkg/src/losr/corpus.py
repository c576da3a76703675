"""Treebank records, the synthetic corpus generator and the eval harness.

A record pairs a tokenized command with its gold tree, the scenes before
and after execution, and alignments from feature leaves to token spans.
The generator renders a description of a sampled scene, then keeps the
record only if the planner executes the gold tree successfully, so every
record satisfies the execution invariant by construction.  Cross-validation
retrains all artifacts per fold and scores the ablation modes sentence by
sentence.
"""

from __future__ import annotations

import json
import os
import random
import re
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import chunker, gss
from .chunker import Chunk, HmmModel
from .lexicon import (
    EllipsisRules,
    Grammar,
    Lexicon,
    OovError,
    induce_ellipsis,
    induce_grammar,
    induce_lexicon,
    load_ellipsis,
    load_grammar,
    load_lexicon,
    save_ellipsis,
    save_grammar,
    save_lexicon,
)
from .planner import PlannerError, execute_sequence, ground, relation_holds, shape_grounding
from .postprocess import (
    AllParsesRejectedError,
    AnaphoraError,
    NoUniqueParseError,
    Selection,
    resolve_anaphora,
    verify_and_score,
)
from .trees import (
    DESTINATION,
    ENTITY,
    EVENT,
    Feature,
    LosrNode,
    MEASURE,
    SEQUENCE,
    chunk_feature,
    deserialize,
    equals_exact,
    item_at,
    iter_nodes,
    serialize,
    strip_ids,
)
from .world import (
    Cell,
    Shape,
    WorldError,
    WorldModel,
    pick_up,
    place_at,
    scene_from_json,
    scene_to_json,
    scenes_equal,
)
from .gss import EXHAUSTIVE, NoParseError, PRUNED

CHUNKER_ERROR = "chunker"
OOV_ERROR = "oov"
ANAPHORA_ERROR = "anaphora"
SCORING_ERROR = "scoring-or-tie"
OTHER_ERROR = "other"
ERROR_CATEGORIES = (CHUNKER_ERROR, OOV_ERROR, ANAPHORA_ERROR, SCORING_ERROR, OTHER_ERROR)

MODE_DEFAULT = "default"
MODE_WITHOUT_SCORING = "without-scoring"
MODE_RANDOM = "random"
MODE_GOLD_CHUNKING = "gold-chunking"
MODE_EXHAUSTIVE = "exhaustive"
EVAL_MODES = (MODE_WITHOUT_SCORING, MODE_RANDOM, MODE_DEFAULT, MODE_GOLD_CHUNKING, MODE_EXHAUSTIVE)


def tokenize(text: str) -> list:
    """Lowercase word tokens; punctuation is dropped."""
    return re.findall(r"[a-z0-9]+(?:'[a-z]+)?", text.lower())


@dataclass(frozen=True)
class TreebankRecord:
    id: str
    tokens: tuple
    scene_before: WorldModel
    scene_after: WorldModel
    gold: LosrNode
    alignment: tuple  # ((path, (start, end)), ...) sorted by start

    def gold_chunks(self) -> list:
        chunks = []
        for path, (start, end) in self.alignment:
            leaf = item_at(self.gold, path)
            chunks.append(Chunk(chunk_feature(leaf), start, end, tuple(self.tokens[start:end])))
        chunks.sort(key=lambda c: c.start)
        return chunks

    def iob2_tags(self) -> list:
        return chunker.aligned_tree_to_iob2(self.tokens, self.gold, self.alignment)


def record_to_json(record: TreebankRecord) -> dict:
    return {
        "id": record.id,
        "tokens": list(record.tokens),
        "scene_before": scene_to_json(record.scene_before),
        "scene_after": scene_to_json(record.scene_after),
        "losr": serialize(record.gold),
        "alignment": [{"path": list(path), "span": [start, end]}
                      for path, (start, end) in record.alignment],
    }


def record_from_json(data: dict) -> TreebankRecord:
    alignment = tuple(
        (tuple(entry["path"]), (int(entry["span"][0]), int(entry["span"][1])))
        for entry in data["alignment"]
    )
    return TreebankRecord(
        id=str(data["id"]),
        tokens=tuple(data["tokens"]),
        scene_before=scene_from_json(data["scene_before"]),
        scene_after=scene_from_json(data["scene_after"]),
        gold=deserialize(data["losr"]),
        alignment=alignment,
    )


def validate_record(record: TreebankRecord) -> None:
    """Alignment sanity plus the execution invariant."""
    record.iob2_tags()  # checks bounds, leaf paths and span disjointness
    result = execute_sequence(record.gold, record.scene_before)
    if not scenes_equal(result, record.scene_after):
        raise ValueError(f"record {record.id}: executing the gold tree does not reach scene_after")


def save_treebank(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_json(record), separators=(",", ":")) + "\n")


def load_treebank(path, validate: bool = True) -> list:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = record_from_json(json.loads(line))
                if validate:
                    validate_record(record)
            except (ValueError, KeyError, PlannerError) as exc:
                raise ValueError(f"{path}:{line_number}: {exc}") from exc
            records.append(record)
    return records


# ---------------------------------------------------------------------------
# Trained artifacts.

ARTIFACT_FILES = {
    "model": "model.hmm",
    "lexicon": "lexicon.txt",
    "grammar": "grammar.txt",
    "ellipsis": "ellipsis.txt",
}


@dataclass
class Artifacts:
    model: HmmModel
    lexicon: Lexicon
    grammar: Grammar
    ellipsis: EllipsisRules


def train_artifacts(records) -> Artifacts:
    tagged = [(list(r.tokens), r.iob2_tags()) for r in records]
    return Artifacts(
        model=chunker.train(tagged),
        lexicon=induce_lexicon(records),
        grammar=induce_grammar(records),
        ellipsis=induce_ellipsis(records),
    )


def save_artifacts(artifacts: Artifacts, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    chunker.save_model(artifacts.model, os.path.join(directory, ARTIFACT_FILES["model"]))
    save_lexicon(artifacts.lexicon, os.path.join(directory, ARTIFACT_FILES["lexicon"]))
    save_grammar(artifacts.grammar, os.path.join(directory, ARTIFACT_FILES["grammar"]))
    save_ellipsis(artifacts.ellipsis, os.path.join(directory, ARTIFACT_FILES["ellipsis"]))


def load_artifacts(directory) -> Artifacts:
    return Artifacts(
        model=chunker.load_model(os.path.join(directory, ARTIFACT_FILES["model"])),
        lexicon=load_lexicon(os.path.join(directory, ARTIFACT_FILES["lexicon"])),
        grammar=load_grammar(os.path.join(directory, ARTIFACT_FILES["grammar"])),
        ellipsis=load_ellipsis(os.path.join(directory, ARTIFACT_FILES["ellipsis"])),
    )


@dataclass
class CommandResult:
    tokens: list
    tags: Optional[list]
    chunks: list
    forest: gss.ParseForest
    selection: Selection
    world_after: WorldModel


def run_command(artifacts: Artifacts, world: WorldModel, command, mode: str = PRUNED,
                selection: str = "scored", seed: int = 0, chunks=None,
                ordered_stacks: bool = False) -> CommandResult:
    """Full pipeline for one command: chunk, parse, resolve, verify, select.

    command may be raw text or a token list; pass chunks to skip tagging.
    Raises OovError, NoParseError, AllParsesRejectedError,
    NoUniqueParseError or AnaphoraError on failure.
    """
    tokens = tokenize(command) if isinstance(command, str) else list(command)
    tags = None
    if chunks is None:
        tags = chunker.tag(artifacts.model, tokens)
        chunks = chunker.extract_chunks(tokens, tags)
    forest = gss.parse(chunks, artifacts.lexicon, artifacts.grammar, artifacts.ellipsis,
                       world, mode)
    result = verify_and_score(forest, world, selection, seed, ordered_stacks)
    return CommandResult(tokens, tags, list(chunks), forest, result,
                         result.chosen.result_world)


# ---------------------------------------------------------------------------
# Corpus generation.

COLOR_NAMES = ("red", "green", "blue", "cyan", "yellow", "magenta", "white", "gray")

COLOR_WORDS = {
    "red": ((("red",), 1.0),),
    "green": ((("green",), 1.0),),
    "blue": ((("blue",), 1.0),),
    "cyan": ((("light", "blue"), 0.65), (("cyan",), 0.35)),
    "yellow": ((("yellow",), 1.0),),
    "magenta": ((("purple",), 0.7), (("magenta",), 0.3)),
    "white": ((("white",), 1.0),),
    "gray": ((("gray",), 0.7), (("grey",), 0.3)),
}

TYPE_WORDS = {
    "cube": ((("cube",), 0.8), (("block",), 0.2)),
    "prism": ((("prism",), 0.75), (("pyramid",), 0.25)),
    "stack": ((("stack",), 0.85), (("tower",), 0.15)),
    "tile": ((("square",), 0.45), (("tile",), 0.3), (("place",), 0.15), (("cell",), 0.1)),
    "corner": ((("corner",), 1.0),),
    "edge": ((("edge",), 1.0),),
    "board": ((("board",), 0.8), (("grid",), 0.2)),
}

TAKE_WORDS = ((("pick", "up"), 0.5), (("take",), 0.3), (("grab",), 0.12), (("lift",), 0.08))
MOVE_WORDS = ((("put",), 0.4), (("place",), 0.35), (("move",), 0.25))
DROP_WORDS = ((("place",), 0.4), (("put",), 0.35), (("drop",), 0.25))

RELATION_WORDS = {
    "above": ((("on",), 0.55), (("on", "top", "of"), 0.25), (("above",), 0.17),
              (("standing", "on", "top", "of"), 0.03)),
    "below": ((("below",), 0.7), (("under",), 0.3)),
    "left": ((("to", "the", "left", "of"), 0.6), (("left", "of"), 0.4)),
    "right": ((("to", "the", "right", "of"), 0.6), (("right", "of"), 0.4)),
    "front": ((("in", "front", "of"), 1.0),),
    "behind": ((("behind",), 1.0),),
    "within": ((("in",), 0.75), (("inside",), 0.25)),
    "adjacent": ((("next", "to"), 0.8), (("beside",), 0.2)),
    "nearest": ((("nearest",), 0.6), (("closest", "to"), 0.4)),
}

INDICATOR_WORDS = {
    "left": ((("left",), 0.85), (("leftmost",), 0.15)),
    "right": ((("right",), 0.85), (("rightmost",), 0.15)),
    "front": ((("front",), 1.0),),
    "back": ((("back",), 0.8), (("rear",), 0.2)),
    "top": ((("top",), 1.0),),
}

CARDINAL_WORDS = {1: ((("one",), 1.0),), 2: ((("two",), 1.0),), 3: ((("three",), 1.0),)}

REFERENCE_WORDS = ((("it",), 0.75), (("one",), 0.25))

# Distinct unseen color words for out-of-vocabulary records; each is used at
# most once per corpus so it can never enter the training folds' lexicon.
NONCE_WORDS = (
    "taupe", "ochre", "sepia", "mauve", "beige", "teal", "amber", "coral",
    "indigo", "ivory", "jade", "khaki", "lilac", "maroon", "navy", "olive",
    "peach", "plum", "rose", "rust", "saffron", "salmon", "scarlet", "sienna",
    "silver", "tan", "topaz", "violet", "wheat", "azure", "brass", "bronze",
    "carmine", "cerise", "cobalt", "copper", "cream", "crimson", "emerald",
    "fuchsia",
)


def _pick(rng: random.Random, options):
    payloads = [p for p, _ in options]
    weights = [w for _, w in options]
    return rng.choices(payloads, weights)[0]


@dataclass
class Lex:
    """An aligned leaf with its surface words (empty words mean unspoken)."""

    feature: Feature
    words: tuple


@dataclass
class MeasureSpec:
    cardinal: Lex
    unit: Lex

    def node(self) -> LosrNode:
        return LosrNode(MEASURE, (self.cardinal.feature, self.unit.feature))


@dataclass
class SrSpec:
    relation: Lex
    landmark: "EntSpec"
    measure: Optional[MeasureSpec] = None

    def node(self) -> LosrNode:
        items = []
        if self.measure is not None:
            items.append(self.measure.node())
        items.append(self.relation.feature)
        items.append(self.landmark.node())
        return LosrNode("spatial-relation", tuple(items))


@dataclass
class EntSpec:
    det: tuple = ("the",)
    leaves: list = field(default_factory=list)
    srs: list = field(default_factory=list)

    def node(self) -> LosrNode:
        items = [l.feature for l in self.leaves] + [sr.node() for sr in self.srs]
        return LosrNode(ENTITY, tuple(items))


def _mark(lex: Lex, tokens: list, span_map: dict) -> None:
    if not lex.words:
        return
    start = len(tokens)
    tokens.extend(lex.words)
    span_map[id(lex.feature)] = (start, len(tokens))


def _render_entity(spec: EntSpec, tokens: list, span_map: dict) -> None:
    tokens.extend(spec.det)
    for leaf in spec.leaves:
        _mark(leaf, tokens, span_map)
    for sr in spec.srs:
        _render_sr(sr, tokens, span_map)


def _render_sr(sr: SrSpec, tokens: list, span_map: dict) -> None:
    if sr.measure is not None:
        _mark(sr.measure.cardinal, tokens, span_map)
        _mark(sr.measure.unit, tokens, span_map)
    _mark(sr.relation, tokens, span_map)
    _render_entity(sr.landmark, tokens, span_map)


def _alignment_from_spans(tree: LosrNode, span_map: dict) -> tuple:
    entries = []

    def walk(node: LosrNode, path: tuple) -> None:
        for i, item in enumerate(node.items):
            p = path + (i,)
            if isinstance(item, Feature):
                span = span_map.get(id(item))
                if span is not None:
                    entries.append((p, span))
            else:
                walk(item, p)

    walk(tree, ())
    entries.sort(key=lambda e: e[1][0])
    return tuple(entries)


def _color_lex(rng, color: str, surface: Optional[tuple] = None) -> Lex:
    words = surface if surface is not None else _pick(rng, COLOR_WORDS[color])
    return Lex(Feature("color", color), words)


def _type_lex(rng, type_name: str) -> Lex:
    return Lex(Feature("type", type_name), _pick(rng, TYPE_WORDS[type_name]))


def _indicator_lex(rng, indicator: str) -> Lex:
    return Lex(Feature("indicator", indicator), _pick(rng, INDICATOR_WORDS[indicator]))


def _relation_lex(rng, relation: str) -> Lex:
    return Lex(Feature("relation", relation), _pick(rng, RELATION_WORDS[relation]))


def _action_lex(value: str, words: tuple) -> Lex:
    return Lex(Feature("action", value), words)


def _reference_lex(rng, spoken: bool) -> Lex:
    words = _pick(rng, REFERENCE_WORDS) if spoken else ()
    return Lex(Feature("type", "reference"), words)


def sample_scene(rng: random.Random, board_size: int = 8) -> WorldModel:
    """A handful of columns with cubes below and an occasional prism on top."""
    cells = [Cell(x, y) for y in range(board_size) for x in range(board_size)]
    columns = rng.sample(cells, rng.randint(4, 7))
    shapes = []
    for cell in columns:
        height = rng.choices([1, 2, 3], [0.6, 0.3, 0.1])[0]
        for z in range(height):
            on_top = z == height - 1
            shape_type = "prism" if on_top and rng.random() < 0.3 else "cube"
            color = rng.choice(COLOR_NAMES)
            shapes.append(Shape(shape_type, color, cell.x, cell.y, z))
    return WorldModel(board_size, frozenset(shapes))


def _sorted_shapes(world: WorldModel) -> list:
    return sorted(world.shapes, key=lambda s: (s.x, s.y, s.z))


def _top_shapes(world: WorldModel) -> list:
    return [s for s in _sorted_shapes(world) if world.top_shape(s.cell) == s]


def _ground_set(world, spec: EntSpec):
    try:
        return ground(spec.node(), world, {})
    except PlannerError:
        return None


def _grounds_to_shape(world, spec: EntSpec, shape: Shape) -> bool:
    result = _ground_set(world, spec)
    return (result is not None and len(result) == 1
            and result[0].kind == "shape" and result[0].shape == shape)


def describe_shape(rng: random.Random, world: WorldModel, shape: Shape,
                   allow_relation: bool = True) -> Optional[EntSpec]:
    """A description that grounds uniquely to the shape, or None.

    Candidate phrasings are tried in a random order: bare type, color plus
    type, an extremal indicator, or a relation to a simply-described
    landmark.
    """
    plans = []
    same_type = [s for s in _sorted_shapes(world) if s.type == shape.type]
    same_color = [s for s in same_type if s.color == shape.color]
    if len(same_type) == 1:
        plans.append(("type", None, 1.0))
    if len(same_color) == 1:
        plans.append(("color", None, 3.0))
    for indicator in ("left", "right", "front", "back", "top"):
        plans.append(("indicator", indicator, 0.8))
    if allow_relation:
        plans.append(("relation", None, 1.5))
    rng.shuffle(plans)
    plans.sort(key=lambda p: -p[2] * rng.random())

    for kind, argument, _ in plans:
        spec = None
        if kind == "type":
            spec = EntSpec(leaves=[_type_lex(rng, shape.type)])
        elif kind == "color":
            spec = EntSpec(leaves=[_color_lex(rng, shape.color), _type_lex(rng, shape.type)])
        elif kind == "indicator":
            with_color = rng.random() < 0.5 and len(same_color) > 1
            leaves = [_indicator_lex(rng, argument)]
            if with_color:
                leaves.append(_color_lex(rng, shape.color))
            leaves.append(_type_lex(rng, shape.type))
            spec = EntSpec(leaves=leaves)
        elif kind == "relation":
            spec = _relation_description(rng, world, shape, same_type, same_color)
        if spec is not None and _grounds_to_shape(world, spec, shape):
            return spec
    return None


def _relation_description(rng, world, shape: Shape, same_type: list,
                          same_color: list) -> Optional[EntSpec]:
    """Restrict by a relation to a landmark that itself describes simply."""
    landmarks = []
    for other in _top_shapes(world):
        if other == shape:
            continue
        others_like = [s for s in world.shapes if s.type == other.type and s.color == other.color]
        if len(others_like) == 1:
            landmarks.append(other)
    rng.shuffle(landmarks)
    use_color = len(same_color) < len(same_type) or rng.random() < 0.5
    base = same_color if use_color else same_type
    for landmark in landmarks[:4]:
        lg = shape_grounding(landmark)
        for relation in ("above", "adjacent", "left", "right", "front", "behind"):
            try:
                matches = [s for s in base
                           if relation_holds(relation, None, shape_grounding(s), lg)]
            except PlannerError:
                continue
            if matches != [shape]:
                continue
            leaves = []
            if use_color:
                leaves.append(_color_lex(rng, shape.color))
            leaves.append(_type_lex(rng, shape.type))
            landmark_spec = EntSpec(leaves=[_color_lex(rng, landmark.color),
                                            _type_lex(rng, landmark.type)])
            return EntSpec(leaves=leaves, srs=[SrSpec(_relation_lex(rng, relation), landmark_spec)])
    return None


def _describe_stack(rng, world: WorldModel) -> Optional[tuple]:
    """(spec, column) for a uniquely describable stack, or None."""
    columns = [world.column(c) for c in world.cells() if len(world.column(c)) >= 2]
    if not columns:
        return None
    rng.shuffle(columns)
    for column in columns:
        colors = []
        for s in column:
            if s.color not in colors:
                colors.append(s.color)
        chosen = colors[: rng.randint(1, min(2, len(colors)))]
        spec = EntSpec(leaves=[_color_lex(rng, c) for c in chosen] + [_type_lex(rng, "stack")])
        result = _ground_set(world, spec)
        if (result is not None and len(result) == 1 and result[0].kind == "stack"
                and list(result[0].column) == column):
            return spec, column
    return None


def _corner_spec(rng, x_side: str, y_side: str) -> EntSpec:
    # Surface order "back right corner": depth indicator first.
    return EntSpec(leaves=[_indicator_lex(rng, y_side), _indicator_lex(rng, x_side),
                           _type_lex(rng, "corner")])


def _corner_cell(world: WorldModel, x_side: str, y_side: str) -> Cell:
    m = world.board_size - 1
    return Cell(0 if x_side == "left" else m, 0 if y_side == "front" else m)


def _event_node(action: Lex, theme: Optional[EntSpec], dest_sr: Optional[SrSpec]) -> LosrNode:
    items = [action.feature]
    if theme is not None:
        items.append(theme.node())
    if dest_sr is not None:
        items.append(LosrNode(DESTINATION, (dest_sr.node(),)))
    return LosrNode(EVENT, tuple(items))


class _Builder:
    """Token list, span map and event collection for one sentence."""

    def __init__(self, rng):
        self.rng = rng
        self.tokens: list = []
        self.span_map: dict = {}
        self.events: list = []

    def event(self, action_value: str, verb_options, theme: Optional[EntSpec],
              dest_sr: Optional[SrSpec], reference_theme: Optional[Lex] = None) -> None:
        if self.events:
            self.tokens.append("and")
        action = _action_lex(action_value, _pick(self.rng, verb_options))
        _mark(action, self.tokens, self.span_map)
        theme_spec = theme
        if reference_theme is not None:
            theme_spec = EntSpec(det=(), leaves=[reference_theme])
        if theme_spec is not None:
            _render_entity(theme_spec, self.tokens, self.span_map)
        if dest_sr is not None:
            _render_sr(dest_sr, self.tokens, self.span_map)
        self.events.append(_event_node(action, theme_spec, dest_sr))

    def root(self) -> LosrNode:
        if len(self.events) == 1:
            return self.events[0]
        return LosrNode(SEQUENCE, tuple(self.events))

    def build(self, world: WorldModel):
        return world, self.tokens, self.root(), self.span_map


def _polite(builder: _Builder) -> None:
    if builder.rng.random() < 0.05:
        builder.tokens.append("please")


# Template functions: return (world, tokens, root, span_map) or None when the
# sampled scene does not support the construction.

def _t_take_simple(rng, state) -> Optional[tuple]:
    world = sample_scene(rng)
    tops = _top_shapes(world)
    if not tops:
        return None
    shape = rng.choice(tops)
    spec = describe_shape(rng, world, shape, allow_relation=False)
    if spec is None:
        return None
    builder = _Builder(rng)
    _polite(builder)
    builder.event("take", TAKE_WORDS, spec, None)
    return builder.build(world)


def _t_take_indicator(rng, state) -> Optional[tuple]:
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        same_type = [s for s in _sorted_shapes(world) if s.type == shape.type]
        if len(same_type) < 2:
            continue
        for indicator in rng.sample(("left", "right", "front", "back"), 4):
            use_color = rng.random() < 0.6
            leaves = [_indicator_lex(rng, indicator)]
            if use_color:
                leaves.append(_color_lex(rng, shape.color))
            leaves.append(_type_lex(rng, shape.type))
            spec = EntSpec(leaves=leaves)
            if _grounds_to_shape(world, spec, shape):
                builder = _Builder(rng)
                builder.event("take", TAKE_WORDS, spec, None)
                return builder.build(world)
    return None


def _t_take_relation(rng, state) -> Optional[tuple]:
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        same_type = [s for s in _sorted_shapes(world) if s.type == shape.type]
        same_color = [s for s in same_type if s.color == shape.color]
        spec = _relation_description(rng, world, shape, same_type, same_color)
        if spec is not None and _grounds_to_shape(world, spec, shape):
            builder = _Builder(rng)
            builder.event("take", TAKE_WORDS, spec, None)
            return builder.build(world)
    return None


def _move_pair(rng, world):
    """(theme shape, theme spec, receiver shape, receiver spec), or None."""
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        spec = describe_shape(rng, world, shape, allow_relation=rng.random() < 0.3)
        if spec is None:
            continue
        try:
            lifted = pick_up(world, shape.cell)
        except WorldError:
            continue
        receivers = [s for s in _top_shapes(lifted) if s.type == "cube"]
        rng.shuffle(receivers)
        for receiver in receivers:
            rspec = describe_shape(rng, lifted, receiver, allow_relation=False)
            if rspec is not None:
                return shape, spec, receiver, rspec
    return None


def _t_move_dest(rng, state) -> Optional[tuple]:
    world = sample_scene(rng)
    pair = _move_pair(rng, world)
    if pair is None:
        return None
    _, spec, _, rspec = pair
    builder = _Builder(rng)
    _polite(builder)
    builder.event("move", MOVE_WORDS, spec, SrSpec(_relation_lex(rng, "above"), rspec))
    return builder.build(world)


def _t_move_measure(rng, state) -> Optional[tuple]:
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        spec = describe_shape(rng, world, shape, allow_relation=False)
        if spec is None:
            continue
        lifted = pick_up(world, shape.cell)
        anchors = _top_shapes(lifted)
        rng.shuffle(anchors)
        for anchor in anchors:
            aspec = describe_shape(rng, lifted, anchor, allow_relation=False)
            if aspec is None:
                continue
            for relation in rng.sample(("left", "right", "front", "behind"), 4):
                n = rng.choices([1, 2, 3], [0.6, 0.3, 0.1])[0]
                measure = MeasureSpec(Lex(Feature("cardinal", n), _pick(rng, CARDINAL_WORDS[n])),
                                      _type_lex(rng, "tile"))
                sr = SrSpec(_relation_lex(rng, relation), aspec, measure)
                builder = _Builder(rng)
                builder.event("move", MOVE_WORDS, spec, sr)
                world2, tokens, root, span_map = builder.build(world)
                try:
                    execute_sequence(root, world)
                except (PlannerError, WorldError):
                    continue
                return world2, tokens, root, span_map
    return None


def _t_sequence(rng, state) -> Optional[tuple]:
    """take X and place [it] on Y."""
    world = sample_scene(rng)
    pair = _move_pair(rng, world)
    if pair is None:
        return None
    _, spec, _, rspec = pair
    spoken = rng.random() < 0.5
    builder = _Builder(rng)
    _polite(builder)
    builder.event("take", TAKE_WORDS, spec, None)
    builder.event("drop", DROP_WORDS, None, SrSpec(_relation_lex(rng, "above"), rspec),
                  reference_theme=_reference_lex(rng, spoken))
    return builder.build(world)


def _t_sequence_measure(rng, state) -> Optional[tuple]:
    """take X and put [it] one square left of Y."""
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        spec = describe_shape(rng, world, shape, allow_relation=False)
        if spec is None:
            continue
        lifted = pick_up(world, shape.cell)
        anchors = _top_shapes(lifted)
        rng.shuffle(anchors)
        for anchor in anchors[:3]:
            aspec = describe_shape(rng, lifted, anchor, allow_relation=False)
            if aspec is None:
                continue
            for relation in rng.sample(("left", "right", "front", "behind"), 4):
                n = rng.choices([1, 2], [0.7, 0.3])[0]
                measure = MeasureSpec(Lex(Feature("cardinal", n), _pick(rng, CARDINAL_WORDS[n])),
                                      _type_lex(rng, "tile"))
                sr = SrSpec(_relation_lex(rng, relation), aspec, measure)
                spoken = rng.random() < 0.4
                builder = _Builder(rng)
                builder.event("take", TAKE_WORDS, spec, None)
                builder.event("drop", DROP_WORDS, None, sr,
                              reference_theme=_reference_lex(rng, spoken))
                world2, tokens, root, span_map = builder.build(world)
                try:
                    execute_sequence(resolve_anaphora(root), world)
                except (PlannerError, WorldError, AnaphoraError):
                    continue
                return world2, tokens, root, span_map
    return None


def _t_type_anaphora(rng, state) -> Optional[tuple]:
    """put the red cube on the yellow one."""
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        if shape.type != "cube":
            continue
        spec = describe_shape(rng, world, shape, allow_relation=False)
        if spec is None:
            continue
        lifted = pick_up(world, shape.cell)
        receivers = [s for s in _top_shapes(lifted)
                     if s.type == "cube" and s.color != shape.color]
        rng.shuffle(receivers)
        for receiver in receivers:
            same = [s for s in lifted.shapes if s.type == receiver.type and s.color == receiver.color]
            if len(same) != 1:
                continue
            anaphor = EntSpec(leaves=[_color_lex(rng, receiver.color),
                                      Lex(Feature("type", "reference"), ("one",))])
            builder = _Builder(rng)
            builder.event("move", MOVE_WORDS, spec, SrSpec(_relation_lex(rng, "above"), anaphor))
            return builder.build(world)
    return None


def _t_corner_dest(rng, state) -> Optional[tuple]:
    """put X in the front left corner."""
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    corners = [(x, y) for x in ("left", "right") for y in ("front", "back")]
    rng.shuffle(corners)
    for shape in tops:
        spec = describe_shape(rng, world, shape, allow_relation=False)
        if spec is None:
            continue
        for x_side, y_side in corners:
            cell = _corner_cell(world, x_side, y_side)
            if cell == shape.cell:
                continue
            top = world.top_shape(cell)
            if top is not None and top.type != "cube":
                continue
            sr = SrSpec(_relation_lex(rng, "within"), _corner_spec(rng, x_side, y_side))
            builder = _Builder(rng)
            builder.event("move", MOVE_WORDS, spec, sr)
            return builder.build(world)
    return None


def _t_stack_landmark(rng, state) -> Optional[tuple]:
    """take X and place it on the blue green stack."""
    world = sample_scene(rng)
    described = _describe_stack(rng, world)
    if described is None:
        return None
    stack_spec, column = described
    if column[-1].type != "cube":
        return None
    tops = [s for s in _top_shapes(world) if s.cell != column[0].cell]
    rng.shuffle(tops)
    for shape in tops:
        spec = describe_shape(rng, world, shape, allow_relation=False)
        if spec is None:
            continue
        spoken = rng.random() < 0.6
        builder = _Builder(rng)
        builder.event("take", TAKE_WORDS, spec, None)
        builder.event("drop", DROP_WORDS, None, SrSpec(_relation_lex(rng, "above"), stack_spec),
                      reference_theme=_reference_lex(rng, spoken))
        return builder.build(world)
    return None


def _t_fig_style(rng, state) -> Optional[tuple]:
    """Long ellipsis sentence with a measured relation and a bare anaphor.

    Shaped like: pick up the left purple prism and place on the red cube one
    place in front of the one in the back right corner.
    """
    board = 8
    corner_sides = rng.choice([("right", "back"), ("left", "back"), ("right", "front")])
    x_side, y_side = corner_sides
    corner = Cell(0 if x_side == "left" else board - 1, 0 if y_side == "front" else board - 1)
    direction = {"back": ("front", (0, -1)), "front": ("behind", (0, 1))}[y_side]
    relation_name, (dx, dy) = direction
    target_cell = Cell(corner.x + dx, corner.y + dy)

    theme_color = rng.choice(("magenta", "cyan", "green", "yellow"))
    landmark_color = rng.choice(("red", "blue", "white", "gray"))
    corner_color = rng.choice(tuple(c for c in COLOR_NAMES if c != landmark_color))

    shapes = [
        Shape("cube", corner_color, corner.x, corner.y, 0),
        Shape("cube", landmark_color, target_cell.x, target_cell.y, 0),
        Shape("prism", theme_color, 1, rng.randint(2, 5), 0),
        Shape("prism", rng.choice(COLOR_NAMES), 5, rng.randint(2, 5), 0),
        Shape("cube", rng.choice(tuple(c for c in COLOR_NAMES if c != landmark_color)),
              3, rng.randint(1, 6), 0),
    ]
    cells = {(s.x, s.y) for s in shapes}
    if len(cells) != len(shapes):
        return None
    world = WorldModel(board, frozenset(shapes))

    theme = EntSpec(leaves=[_indicator_lex(rng, "left"), _color_lex(rng, theme_color),
                            _type_lex(rng, "prism")])
    corner_entity = _corner_spec(rng, x_side, y_side)
    anaphor = EntSpec(leaves=[Lex(Feature("type", "reference"), ("one",))],
                      srs=[SrSpec(_relation_lex(rng, "within"), corner_entity)])
    measure = MeasureSpec(Lex(Feature("cardinal", 1), ("one",)),
                          Lex(Feature("type", "tile"), ("place",)))
    landmark = EntSpec(leaves=[_color_lex(rng, landmark_color), _type_lex(rng, "cube")],
                       srs=[SrSpec(_relation_lex(rng, relation_name), anaphor, measure)])
    builder = _Builder(rng)
    builder.event("take", ((("pick", "up"), 1.0),), theme, None)
    builder.event("drop", ((("place",), 0.7), (("put",), 0.3)), None,
                  SrSpec(Lex(Feature("relation", "above"), ("on",)), landmark),
                  reference_theme=_reference_lex(rng, False))
    return builder.build(world)


def _t_multi_sequence(rng, state) -> Optional[tuple]:
    """Several take-and-place pairs in one command (long sentences)."""
    world = sample_scene(rng)
    builder = _Builder(rng)
    current = world
    pairs = rng.choices([2, 3, 4], [0.55, 0.3, 0.15])[0]
    for _ in range(pairs):
        pair = _move_pair(rng, current)
        if pair is None:
            return None
        shape, spec, receiver, rspec = pair
        spoken = rng.random() < 0.7
        builder.event("take", TAKE_WORDS, spec, None)
        builder.event("drop", DROP_WORDS, None, SrSpec(_relation_lex(rng, "above"), rspec),
                      reference_theme=_reference_lex(rng, spoken))
        current = place_at(pick_up(current, shape.cell), receiver.cell)
    return builder.build(world)


def _t_chain_relation(rng, state) -> Optional[tuple]:
    """take the blue prism on the blue cube on the red cube [and put it on
    the blue cube in the back left corner].

    The corpus uses 'blue' for both blue and cyan, and the scene is arranged
    so each mention has exactly one live value: all blue-or-cyan cubes share
    one value and the blue-or-cyan prism takes the other.  A parser that
    ignores the scene must thread both senses of every mention through the
    whole relation chain; a scene-checked parser drops the dead sense at its
    first reduction.
    """
    board = 8
    hops = rng.choices([2, 3, 4], [0.3, 0.45, 0.25])[0]
    cube_value, prism_value = ("blue", "cyan") if rng.random() < 0.5 else ("cyan", "blue")
    plain = ["red", "green", "yellow", "white", "gray"]
    rng.shuffle(plain)
    # Tower bottom..top: plain cubes, then the ambiguous cube, prism on top.
    tower_colors = [plain.pop() for _ in range(hops - 1)] + [cube_value, prism_value]

    tx, ty = rng.randint(1, board - 2), rng.randint(1, board - 2)
    shapes = []
    for z, color in enumerate(tower_colors):
        shape_type = "prism" if color == prism_value else "cube"
        shapes.append(Shape(shape_type, color, tx, ty, z))

    spec = None
    for color in tower_colors:
        surface = ("blue",) if color in ("blue", "cyan") else None
        shape_type = "prism" if color == prism_value else "cube"
        leaves = [_color_lex(rng, color, surface=surface), _type_lex(rng, shape_type)]
        srs = [] if spec is None else [SrSpec(_relation_lex(rng, "above"), spec)]
        spec = EntSpec(leaves=leaves, srs=srs)

    corner_spec = None
    if rng.random() < 0.6:
        x_side = rng.choice(("left", "right"))
        y_side = rng.choice(("front", "back"))
        cell = Cell(0 if x_side == "left" else board - 1,
                    0 if y_side == "front" else board - 1)
        shapes.append(Shape("cube", cube_value, cell.x, cell.y, 0))
        corner_spec = EntSpec(
            leaves=[_color_lex(rng, cube_value, surface=("blue",)), _type_lex(rng, "cube")],
            srs=[SrSpec(_relation_lex(rng, "within"), _corner_spec(rng, x_side, y_side))])

    occupied = {(s.x, s.y) for s in shapes}
    free = [(x, y) for x in range(board) for y in range(board) if (x, y) not in occupied]
    for _ in range(rng.randint(1, 2)):
        fx, fy = free.pop(rng.randrange(len(free)))
        shapes.append(Shape(rng.choice(("cube", "prism")),
                            rng.choice(("red", "green", "yellow", "white", "gray")),
                            fx, fy, 0))

    world = WorldModel(board, frozenset(shapes))
    builder = _Builder(rng)
    builder.event("take", TAKE_WORDS, spec, None)
    if corner_spec is not None:
        spoken = rng.random() < 0.7
        builder.event("drop", DROP_WORDS, None,
                      SrSpec(_relation_lex(rng, "above"), corner_spec),
                      reference_theme=_reference_lex(rng, spoken))
    return builder.build(world)


def _ambiguity_scene(rng, include_blue: bool):
    """A scene with one clear cyan cube and optionally one clear blue twin.

    Blue and cyan shapes are stripped from a sampled scene column by column,
    truncating each column at the first removal so nothing floats, then the
    controlled cubes are dropped onto fresh cells.
    """
    base = sample_scene(rng)
    shapes = set()
    for cell in base.cells():
        for shape in base.column(cell):
            if shape.color in ("blue", "cyan"):
                break
            shapes.add(shape)
    occupied = {(s.x, s.y) for s in shapes}
    free = [c for c in base.cells() if (c.x, c.y) not in occupied]
    needed = 2 if include_blue else 1
    if len(free) < needed:
        return None
    spots = rng.sample(free, needed)
    shapes.add(Shape("cube", "cyan", spots[0].x, spots[0].y, 0))
    if include_blue:
        shapes.add(Shape("cube", "blue", spots[1].x, spots[1].y, 0))
    return WorldModel(base.board_size, frozenset(shapes))


def _t_blue_means_cyan(rng, state) -> Optional[tuple]:
    """'blue' spoken about the only cyan cube; trains the secondary sense."""
    world = _ambiguity_scene(rng, include_blue=False)
    if world is None:
        return None
    cyan = next(s for s in _sorted_shapes(world) if s.color == "cyan")
    spec = EntSpec(leaves=[_color_lex(rng, "cyan", surface=("blue",)), _type_lex(rng, "cube")])
    if not _grounds_to_shape(world, spec, cyan):
        return None
    builder = _Builder(rng)
    builder.event("take", TAKE_WORDS, spec, None)
    return builder.build(world)


def _t_blue_ambiguous(rng, state) -> Optional[tuple]:
    """'blue cube' with both a blue and a cyan cube takeable; gold is blue."""
    world = _ambiguity_scene(rng, include_blue=True)
    if world is None:
        return None
    blue = next(s for s in _sorted_shapes(world) if s.color == "blue")
    spec = EntSpec(leaves=[_color_lex(rng, "blue"), _type_lex(rng, "cube")])
    if not _grounds_to_shape(world, spec, blue):
        return None
    builder = _Builder(rng)
    builder.event("take", TAKE_WORDS, spec, None)
    return builder.build(world)


def _t_oov_color(rng, state) -> Optional[tuple]:
    """A color word no training fold will ever hold an entry for."""
    used = state.setdefault("nonce_used", 0)
    if used >= len(NONCE_WORDS):
        return None
    world = sample_scene(rng)
    tops = _top_shapes(world)
    rng.shuffle(tops)
    for shape in tops:
        same_color = [s for s in world.shapes if s.type == shape.type and s.color == shape.color]
        if len(same_color) != 1:
            continue
        nonce = NONCE_WORDS[used]
        state["nonce_used"] = used + 1
        spec = EntSpec(leaves=[_color_lex(rng, shape.color, surface=(nonce,)),
                               _type_lex(rng, shape.type)])
        builder = _Builder(rng)
        builder.event("take", TAKE_WORDS, spec, None)
        return builder.build(world)
    return None


def _t_tie_attachment(rng, state) -> Optional[tuple]:
    """'the cube on the red cube on the board': two verified attachments
    carrying identical weights; gold alternates between them."""
    world = sample_scene(rng)
    stacked = []
    for cell in world.cells():
        column = world.column(cell)
        if len(column) >= 2 and column[-1].type == "cube":
            stacked.append(column)
    rng.shuffle(stacked)
    for column in stacked:
        target = column[-1]
        below = column[-2]
        if below.type != "cube":
            continue
        like_below = [s for s in world.shapes if s.type == "cube" and s.color == below.color]
        if len(like_below) != 1:
            continue
        on_below = [s for s in world.shapes
                    if s.type == "cube" and s.cell == below.cell and s.z > below.z]
        if on_below != [target]:
            continue
        landmark = EntSpec(leaves=[_color_lex(rng, below.color),
                                   Lex(Feature("type", "cube"), ("cube",))])
        board_spec = EntSpec(leaves=[_type_lex(rng, "board")])
        on1 = Lex(Feature("relation", "above"), ("on",))
        on2 = Lex(Feature("relation", "above"), ("on",))
        nested = rng.random() < 0.5
        if nested:
            landmark.srs.append(SrSpec(on2, board_spec))
            theme = EntSpec(leaves=[Lex(Feature("type", "cube"), ("cube",))],
                            srs=[SrSpec(on1, landmark)])
        else:
            theme = EntSpec(leaves=[Lex(Feature("type", "cube"), ("cube",))],
                            srs=[SrSpec(on1, landmark), SrSpec(on2, board_spec)])
        if not _grounds_to_shape(world, theme, target):
            continue
        builder = _Builder(rng)
        builder.event("take", ((("pick", "up"), 0.6), (("take",), 0.4)), theme, None)
        return builder.build(world)
    return None


def _t_wrong_anaphora(rng, state) -> Optional[tuple]:
    """A type anaphor whose true antecedent is not the nearest entity.

    Shaped like "put the red cube behind the prism on the yellow one".
    The gold binding skips the nearer prism landmark and points the anaphor
    at the cube theme; surface-order resolution binds it to the prism
    instead, the anaphor then fails to ground (no prism of that color
    exists), and every parse is rejected.
    """
    world = sample_scene(rng)
    cubes = [s for s in _top_shapes(world) if s.type == "cube"]
    prisms = [s for s in _top_shapes(world) if s.type == "prism"]
    rng.shuffle(cubes)
    rng.shuffle(prisms)
    for shape in cubes:
        for prism in prisms:
            like_prism = [s for s in world.shapes
                          if s.type == "prism" and s.color == prism.color]
            pspec = (EntSpec(leaves=[_type_lex(rng, "prism")])
                     if len([s for s in world.shapes if s.type == "prism"]) == 1
                     else EntSpec(leaves=[_color_lex(rng, prism.color),
                                          _type_lex(rng, "prism")]))
            if len(like_prism) > 1 or not _grounds_to_shape(world, pspec, prism):
                continue
            for relation in ("behind", "front", "left", "right", "adjacent"):
                theme = EntSpec(leaves=[_color_lex(rng, shape.color),
                                        _type_lex(rng, "cube")],
                                srs=[SrSpec(_relation_lex(rng, relation), pspec)])
                if not _grounds_to_shape(world, theme, shape):
                    continue
                lifted = pick_up(world, shape.cell)
                receivers = [s for s in _top_shapes(lifted) if s.type == "cube"]
                rng.shuffle(receivers)
                for receiver in receivers:
                    same_cube = [s for s in lifted.shapes
                                 if s.type == "cube" and s.color == receiver.color]
                    wrong_type = [s for s in lifted.shapes
                                  if s.type == "prism" and s.color == receiver.color]
                    if len(same_cube) != 1 or wrong_type:
                        continue
                    anaphor = EntSpec(leaves=[_color_lex(rng, receiver.color),
                                              Lex(Feature("type", "reference"), ("one",))])
                    builder = _Builder(rng)
                    builder.event("move", MOVE_WORDS, theme,
                                  SrSpec(_relation_lex(rng, "above"), anaphor))
                    world2, tokens, root, span_map = builder.build(world)
                    gold = _bind_manually(root, (1,), _last_anaphor_path(root))
                    try:
                        execute_sequence(gold, world)
                    except (PlannerError, WorldError):
                        continue
                    state["manual_gold"] = gold
                    return world2, tokens, root, span_map
    return None


def _last_anaphor_path(root: LosrNode) -> tuple:
    anaphor_path = None
    for path, node in iter_nodes(root):
        if node.label == ENTITY and node.feature_value("type") == "reference":
            anaphor_path = path
    if anaphor_path is None:
        raise ValueError("no anaphor in tree")
    return anaphor_path


def _bind_manually(root: LosrNode, antecedent_path: tuple, anaphor_path: tuple) -> LosrNode:
    from .postprocess import _rebuild

    rebuilt, _ = _rebuild(root, (), {antecedent_path: [Feature("id", 1)]},
                          {anaphor_path: [Feature("reference-id", 1)]})
    return rebuilt


TEMPLATES = {
    "take-simple": _t_take_simple,
    "take-indicator": _t_take_indicator,
    "take-relation": _t_take_relation,
    "move-dest": _t_move_dest,
    "move-measure": _t_move_measure,
    "sequence": _t_sequence,
    "sequence-measure": _t_sequence_measure,
    "type-anaphora": _t_type_anaphora,
    "corner-dest": _t_corner_dest,
    "stack-landmark": _t_stack_landmark,
    "fig-style": _t_fig_style,
    "multi-sequence": _t_multi_sequence,
    "chain-relation": _t_chain_relation,
    "blue-means-cyan": _t_blue_means_cyan,
    "blue-ambiguous": _t_blue_ambiguous,
    "oov-color": _t_oov_color,
    "tie-attachment": _t_tie_attachment,
    "wrong-anaphora": _t_wrong_anaphora,
}

_BASE_WEIGHTS = {
    "take-simple": 0.17,
    "take-indicator": 0.10,
    "take-relation": 0.11,
    "move-dest": 0.14,
    "move-measure": 0.09,
    "sequence": 0.12,
    "sequence-measure": 0.05,
    "type-anaphora": 0.07,
    "corner-dest": 0.07,
    "stack-landmark": 0.04,
    "fig-style": 0.04,
}

PROFILES = {
    "clean": dict(_BASE_WEIGHTS),
    "standard": {**_BASE_WEIGHTS, "blue-means-cyan": 0.06, "blue-ambiguous": 0.05},
    "adversarial": {**_BASE_WEIGHTS, "blue-means-cyan": 0.05, "blue-ambiguous": 0.04,
                    "oov-color": 0.08, "tie-attachment": 0.06, "wrong-anaphora": 0.05},
    "relation-heavy": {"take-relation": 0.16, "move-measure": 0.10, "fig-style": 0.08,
                       "stack-landmark": 0.08, "sequence": 0.10, "sequence-measure": 0.08,
                       "multi-sequence": 0.12, "chain-relation": 0.28},
    "timing": {"take-simple": 0.16, "take-indicator": 0.10, "take-relation": 0.14,
               "move-dest": 0.12, "move-measure": 0.10, "sequence": 0.14,
               "sequence-measure": 0.08, "multi-sequence": 0.16},
}


def _grounds_in_initial_scene(record: TreebankRecord) -> bool:
    """Every reference-free entity of the gold tree grounds in scene_before.

    Frontier pruning checks entity subtrees against the scene as it stands
    at parse time, but a later event's description may only hold after
    earlier events have moved things.  Such commands are valid yet their
    gold parse would be pruned, so the generator rejects them.
    """
    from .gss import contains_reference

    stripped = strip_ids(record.gold)
    for _, node in iter_nodes(stripped):
        if node.label != ENTITY or contains_reference(node):
            continue
        try:
            if not ground(node, record.scene_before, {}):
                return False
        except PlannerError:
            return False
    return True


def generate_corpus(count: int, profile: str = "standard", seed: int = 0) -> list:
    """Deterministic synthetic treebank; same arguments, same records."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    rng = random.Random(seed)
    weights = PROFILES[profile]
    names = sorted(weights)
    name_weights = [weights[n] for n in names]
    records = []
    state: dict = {}
    attempts = 0
    while len(records) < count:
        attempts += 1
        if attempts > max(1000, count * 500):
            raise RuntimeError(f"corpus generation stalled after {attempts} attempts")
        template = rng.choices(names, name_weights)[0]
        state.pop("manual_gold", None)
        built = TEMPLATES[template](rng, state)
        if built is None:
            continue
        world, tokens, root, span_map = built
        try:
            gold = state.get("manual_gold") or resolve_anaphora(root)
            after = execute_sequence(gold, world)
        except (PlannerError, AnaphoraError, WorldError):
            continue
        alignment = _alignment_from_spans(gold, span_map)
        record = TreebankRecord(
            id=f"{profile}-{seed}-{len(records):04d}",
            tokens=tuple(tokens),
            scene_before=world,
            scene_after=after,
            gold=gold,
            alignment=alignment,
        )
        try:
            validate_record(record)
        except ValueError:
            continue
        if not _grounds_in_initial_scene(record):
            continue
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# Evaluation.

@dataclass
class ModeResult:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class EvalReport:
    folds: int
    mode_results: dict
    error_counts: Counter
    timing_rows: list = field(default_factory=list)
    stats_totals: dict = field(default_factory=dict)

    def accuracy(self, mode: str) -> float:
        return self.mode_results[mode].accuracy

    def table_text(self) -> str:
        total = next(iter(self.mode_results.values())).total if self.mode_results else 0
        lines = [f"parsing accuracy over {total} records, {self.folds} folds", ""]
        lines.append(f"{'mode':<18}{'correct':>8}{'total':>8}{'accuracy':>10}")
        for mode in EVAL_MODES:
            if mode not in self.mode_results:
                continue
            r = self.mode_results[mode]
            lines.append(f"{mode:<18}{r.correct:>8}{r.total:>8}{r.accuracy:>10.4f}")
        misparses = sum(self.error_counts.values())
        lines.append("")
        lines.append(f"default-mode misparses: {misparses}")
        for category in ERROR_CATEGORIES:
            lines.append(f"  {category:<16}{self.error_counts.get(category, 0):>6}")
        return "\n".join(lines)

    def timing_csv(self) -> str:
        rows = ["record,words,mode,ms"]
        for record_id, words, mode, seconds in self.timing_rows:
            rows.append(f"{record_id},{words},{mode},{seconds * 1000.0:.4f}")
        return "\n".join(rows)


def _record_seed(seed: int, record_id: str) -> int:
    return seed ^ zlib.crc32(record_id.encode("utf-8"))


def classify_misparse(record: TreebankRecord, predicted_chunks, gold_chunks,
                      chosen, failure, parses) -> str:
    """Assign one failure category to an incorrect default-mode result.

    Categories are checked upstream first: a wrong chunk sequence is a
    chunker error no matter what broke downstream, then missing lexicon
    entries, then bad anaphor bindings (the chosen tree matches gold once
    ids are stripped, or every strip-equal candidate was rejected), then
    ranking mistakes where gold was verified but not chosen.
    """
    if predicted_chunks is not None and list(predicted_chunks) != list(gold_chunks):
        return CHUNKER_ERROR
    if isinstance(failure, OovError):
        return OOV_ERROR
    if isinstance(failure, AnaphoraError):
        return ANAPHORA_ERROR
    gold_stripped = strip_ids(record.gold).text
    if isinstance(failure, AllParsesRejectedError):
        if any(strip_ids(p.tree).text == gold_stripped for p in failure.parses):
            return ANAPHORA_ERROR
        return OTHER_ERROR
    if failure is not None:
        return OTHER_ERROR
    if chosen is not None:
        if strip_ids(chosen.tree).text == gold_stripped:
            return ANAPHORA_ERROR
        verified_texts = {p.tree.text for p in parses if p.verified}
        if record.gold.text in verified_texts:
            return SCORING_ERROR
        return OTHER_ERROR
    return OTHER_ERROR


def _mode_plan(mode: str):
    if mode == MODE_DEFAULT:
        return ("tagged", PRUNED, "scored")
    if mode == MODE_WITHOUT_SCORING:
        return ("tagged", PRUNED, "first")
    if mode == MODE_RANDOM:
        return ("tagged", PRUNED, "random")
    if mode == MODE_GOLD_CHUNKING:
        return ("gold", PRUNED, "scored")
    if mode == MODE_EXHAUSTIVE:
        return ("tagged", EXHAUSTIVE, "scored")
    raise ValueError(f"unknown evaluation mode {mode!r}")


def evaluate_record(artifacts: Artifacts, record: TreebankRecord, mode: str,
                    seed: int = 0, tagged_chunks=None):
    """(correct, chunks, chosen, failure, parses, forest) for one record."""
    chunk_source, parse_mode, selection = _mode_plan(mode)
    chunks = None
    failure = None
    chosen = None
    parses = []
    forest = None
    try:
        if chunk_source == "gold":
            chunks = record.gold_chunks()
        elif tagged_chunks is not None:
            chunks = tagged_chunks
        else:
            tags = chunker.tag(artifacts.model, list(record.tokens))
            chunks = chunker.extract_chunks(list(record.tokens), tags)
        forest = gss.parse(chunks, artifacts.lexicon, artifacts.grammar,
                           artifacts.ellipsis, record.scene_before, parse_mode)
        result = verify_and_score(forest, record.scene_before, selection,
                                  _record_seed(seed, record.id))
        chosen = result.chosen
        parses = result.parses
    except (OovError, NoParseError, AllParsesRejectedError,
            NoUniqueParseError, AnaphoraError, chunker.ChunkError) as exc:
        failure = exc
    correct = chosen is not None and equals_exact(chosen.tree, record.gold)
    return correct, chunks, chosen, failure, parses, forest


def cross_validate(records, folds: int = 10, seed: int = 0, modes=EVAL_MODES,
                   collect_timing: bool = False) -> EvalReport:
    """k-fold cross-validation over the ablation modes.

    Records are shuffled once with the seed and dealt round-robin; each fold
    retrains every artifact on the remaining records.  Error categories are
    tallied for default-mode misparses only.
    """
    rng = random.Random(seed)
    shuffled = list(records)
    rng.shuffle(shuffled)
    fold_of = {record.id: i % folds for i, record in enumerate(shuffled)}

    mode_results = {mode: ModeResult() for mode in modes}
    error_counts: Counter = Counter()
    timing_rows = []
    stats_totals = {mode: {"vertices": 0, "reductions": 0, "pruned": 0, "elapsed": 0.0}
                    for mode in modes}

    for fold in range(folds):
        train_records = [r for r in shuffled if fold_of[r.id] != fold]
        test_records = [r for r in shuffled if fold_of[r.id] == fold]
        if not train_records or not test_records:
            continue
        artifacts = train_artifacts(train_records)
        for record in test_records:
            gold_chunks = record.gold_chunks()
            tagged_chunks = None
            try:
                tags = chunker.tag(artifacts.model, list(record.tokens))
                tagged_chunks = chunker.extract_chunks(list(record.tokens), tags)
            except chunker.ChunkError:
                tagged_chunks = None
            for mode in modes:
                correct, chunks, chosen, failure, parses, forest = evaluate_record(
                    artifacts, record, mode, seed, tagged_chunks)
                result = mode_results[mode]
                result.total += 1
                if correct:
                    result.correct += 1
                if forest is not None:
                    totals = stats_totals[mode]
                    totals["vertices"] += forest.stats.vertices
                    totals["reductions"] += forest.stats.reductions_attempted
                    totals["pruned"] += forest.stats.entities_pruned
                    totals["elapsed"] += forest.stats.elapsed
                    if collect_timing:
                        timing_rows.append((record.id, len(record.tokens), mode,
                                            forest.stats.elapsed))
                if mode == MODE_DEFAULT and not correct:
                    error_counts[classify_misparse(record, tagged_chunks, gold_chunks,
                                                   chosen, failure, parses)] += 1
    return EvalReport(folds, mode_results, error_counts, timing_rows, stats_totals)


# ---------------------------------------------------------------------------
# Parse timing.

@dataclass
class TimingReport:
    rows: list  # (record id, words, mode, seconds)

    def bucket_means(self, mode: str, min_words: int = 0,
                     max_words: int = 10 ** 9) -> dict:
        buckets = defaultdict(list)
        for _, words, row_mode, seconds in self.rows:
            if row_mode == mode and min_words <= words <= max_words:
                buckets[words].append(seconds)
        return {words: sum(values) / len(values) for words, values in sorted(buckets.items())}

    def slope(self, mode: str, min_words: int = 0, max_words: int = 10 ** 9) -> float:
        """Least-squares slope of log parse time against log sentence length.

        ``min_words``/``max_words`` restrict the fit to a length window so
        a handful of extreme outliers cannot dominate the regression.
        """
        means = self.bucket_means(mode, min_words, max_words)
        if len(means) < 2:
            return 0.0
        xs = np.log([float(w) for w in means])
        ys = np.log([means[w] for w in means])
        return float(np.polyfit(xs, ys, 1)[0])

    def total(self, mode: str) -> float:
        return sum(seconds for _, _, row_mode, seconds in self.rows if row_mode == mode)

    def csv_text(self) -> str:
        lines = ["record,words,mode,ms"]
        for record_id, words, mode, seconds in self.rows:
            lines.append(f"{record_id},{words},{mode},{seconds * 1000.0:.4f}")
        return "\n".join(lines)


def timing_profile(records, artifacts: Artifacts, repeats: int = 3,
                   modes=(PRUNED, EXHAUSTIVE)) -> TimingReport:
    """Best-of-n parse times per record and mode, over gold chunks.

    Gold chunks keep the measurement about the parser rather than the
    tagger; the best of the repeats damps scheduler noise.
    """
    rows = []
    for record in records:
        chunks = record.gold_chunks()
        for mode in modes:
            best = None
            for _ in range(repeats):
                forest = gss.parse(chunks, artifacts.lexicon, artifacts.grammar,
                                   artifacts.ellipsis, record.scene_before, mode)
                elapsed = forest.stats.elapsed
                if best is None or elapsed < best:
                    best = elapsed
            rows.append((record.id, len(record.tokens), mode, best))
    return TimingReport(rows)
