"""Shift-reduce parsing over a graph-structured stack.

Every chunk is shifted as one vertex per lexicon sense, stacked on top of
the whole previous frontier; reductions run grammar productions backwards
along stack paths and pack identical subtrees spanning the same chunks into
a single vertex, so the forest stays polynomial while ambiguity multiplies.
In pruned mode a freshly reduced entity that the scene cannot ground is
discarded on the spot, unless it contains an unresolved reference (those
only become checkable after anaphora resolution).  Ellipsis rules insert an
unspoken reference vertex between two chunks whose features license one.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from . import planner
from .trees import ENTITY, EVENT, Feature, LosrNode, SEQUENCE, tree_feature

PRUNED = "pruned"
EXHAUSTIVE = "exhaustive"

BOTTOM_TEXT = "-"


class NoParseError(ValueError):
    """The sentence produced no accepted parse."""


@dataclass
class Vertex:
    vid: int
    item: object  # Feature, LosrNode, or None for the stack bottom
    symbol: object  # grammar symbol; None for the bottom
    text: str
    span_start: int
    span_end: int
    frontier: int
    successors: list
    weights: tuple = ()
    # Mirrors `successors` for O(1) membership; edges stay ordered in the list.
    successor_set: set = field(default_factory=set)


@dataclass
class ParseStats:
    vertices: int = 0
    reductions_attempted: int = 0
    entities_pruned: int = 0
    elapsed: float = 0.0


@dataclass
class ParsedTree:
    tree: LosrNode
    weights: tuple

    @property
    def score(self) -> float:
        result = 1.0
        for w in self.weights:
            result *= w
        return result


@dataclass
class ParseForest:
    trees: list
    stats: ParseStats
    state: object = None

    def texts(self) -> list:
        return [t.tree.text for t in self.trees]


class GssState:
    def __init__(self, chunks, lexicon, grammar, ellipsis_rules, world, mode):
        if mode not in (PRUNED, EXHAUSTIVE):
            raise ValueError(f"unknown parse mode {mode!r}")
        if mode == PRUNED and world is None:
            raise ValueError("pruned mode requires a world")
        self.chunks = list(chunks)
        self.lexicon = lexicon
        self.grammar = grammar
        self.ellipsis_rules = ellipsis_rules
        self.world = world
        self.mode = mode
        self.position = 0
        self.last_shift_feature = None
        bottom = Vertex(0, None, None, BOTTOM_TEXT, 0, 0, 0, [])
        self.vertices = {0: bottom}
        self.order = [0]
        self.frontiers = [[0]]
        self.dedup = {}
        self.stats = ParseStats(vertices=0)
        self._ground_cache = {}

    @property
    def current(self) -> list:
        return self.frontiers[-1]

    def new_vertex(self, item, symbol, text, span_start, span_end, successors, weights) -> int:
        vid = len(self.order)
        vertex = Vertex(vid, item, symbol, text, span_start, span_end,
                        len(self.frontiers) - 1, list(successors), tuple(weights),
                        set(successors))
        self.vertices[vid] = vertex
        self.order.append(vid)
        self.dedup[(text, span_start, span_end)] = vid
        self.stats.vertices += 1
        return vid

    def match_paths(self, rhs, vid) -> list:
        """Stack paths realizing the production body, ending at vid.

        Paths are returned leftmost-item first; the search walks successor
        edges backwards, trying edges in their insertion order.
        """
        paths = []

        def backtrack(position, current_vid, suffix):
            if position == 0:
                paths.append([current_vid] + suffix)
                return
            for s in self.vertices[current_vid].successors:
                if self.vertices[s].symbol == rhs[position - 1]:
                    backtrack(position - 1, s, [current_vid] + suffix)

        backtrack(len(rhs) - 1, vid, [])
        return paths

    def groundable(self, entity: LosrNode) -> bool:
        # The world is fixed for the whole parse, so the answer only
        # depends on the description; packing makes repeats common.
        cached = self._ground_cache.get(entity.text)
        if cached is None:
            try:
                cached = bool(planner.ground(entity, self.world, {}))
            except planner.PlannerError:
                cached = False
            self._ground_cache[entity.text] = cached
        return cached


def contains_reference(node: LosrNode) -> bool:
    stack = [node]
    while stack:
        current = stack.pop()
        for item in current.items:
            if isinstance(item, Feature):
                if item.name == "reference-id" or (item.name == "type" and item.value == "reference"):
                    return True
            else:
                stack.append(item)
    return False


def shift(state: GssState) -> None:
    """Consume the next chunk: one vertex per lexicon sense, each stacked on
    the whole previous frontier."""
    chunk = state.chunks[state.position]
    senses = state.lexicon.lookup(chunk.phrase, chunk.feature)
    previous = list(state.current)
    state.frontiers.append([])
    for value, weight in senses:
        feature = Feature(tree_feature(chunk.feature), value)
        vid = state.new_vertex(feature, feature.name, feature.text,
                               state.position, state.position + 1, previous, (weight,))
        state.current.append(vid)
    state.last_shift_feature = chunk.feature
    state.position += 1


def reduce_step(state: GssState) -> None:
    """Run reductions to a fixed point over the current frontier.

    A reduction that rebuilds an already-known (subtree, span) lands on the
    existing vertex; new stack edges discovered that way requeue the vertex
    so reductions through it are retried.
    """
    agenda = deque(state.current)
    queued = set(agenda)
    while agenda:
        vid = agenda.popleft()
        queued.discard(vid)
        vertex = state.vertices[vid]
        if vertex.symbol is None:
            continue
        for production in state.grammar.by_last_symbol(vertex.symbol):
            for path in state.match_paths(production.rhs, vid):
                state.stats.reductions_attempted += 1
                items = tuple(state.vertices[p].item for p in path)
                node = LosrNode(production.lhs, items)
                if (state.mode == PRUNED and production.lhs == ENTITY
                        and not contains_reference(node) and not state.groundable(node)):
                    state.stats.entities_pruned += 1
                    continue
                first = state.vertices[path[0]]
                key = (node.text, first.span_start, vertex.span_end)
                existing_vid = state.dedup.get(key)
                if existing_vid is not None:
                    existing = state.vertices[existing_vid]
                    grew = False
                    for s in first.successors:
                        if s not in existing.successor_set:
                            existing.successors.append(s)
                            existing.successor_set.add(s)
                            grew = True
                    if grew and existing_vid not in queued:
                        agenda.append(existing_vid)
                        queued.add(existing_vid)
                    continue
                weights = tuple(w for p in path for w in state.vertices[p].weights)
                new_vid = state.new_vertex(node, node.label, node.text,
                                           first.span_start, vertex.span_end,
                                           first.successors, weights)
                state.current.append(new_vid)
                agenda.append(new_vid)
                queued.add(new_vid)


def add_ellipsis(state: GssState) -> bool:
    """Insert an unspoken reference vertex if the rules license one between
    the last shifted chunk and the next chunk in the queue."""
    if state.last_shift_feature is None or state.position >= len(state.chunks):
        return False
    template = state.ellipsis_rules.lookup(state.last_shift_feature, state.chunks[state.position].feature)
    if template is None:
        return False
    previous = list(state.current)
    state.frontiers.append([])
    vid = state.new_vertex(template, template.label, template.text,
                           state.position, state.position, previous, (1.0,))
    state.current.append(vid)
    return True


def accepted_parses(state: GssState) -> list:
    """Sequence or event vertices covering every chunk and resting on the
    stack bottom, deduplicated by canonical text and sorted by it."""
    results = {}
    for vid in state.order:
        v = state.vertices[vid]
        if not isinstance(v.item, LosrNode) or v.item.label not in (SEQUENCE, EVENT):
            continue
        if v.span_start != 0 or v.span_end != len(state.chunks):
            continue
        if 0 not in v.successor_set:
            continue
        results.setdefault(v.text, ParsedTree(v.item, v.weights))
    return [results[text] for text in sorted(results)]


def parse(chunks, lexicon, grammar, ellipsis_rules, world=None, mode=PRUNED) -> ParseForest:
    """Parse a chunk sequence into a forest of candidate trees.

    The forest may be empty; rejecting that is the pipeline's call.  Raises
    OovError when a chunk has no lexicon entry.
    """
    state = GssState(chunks, lexicon, grammar, ellipsis_rules, world, mode)
    started = time.perf_counter()
    while state.position < len(state.chunks):
        shift(state)
        reduce_step(state)
        if add_ellipsis(state):
            reduce_step(state)
    state.stats.elapsed = time.perf_counter() - started
    return ParseForest(accepted_parses(state), state.stats, state)


def dump(state: GssState) -> str:
    """One vertex per line: id, frontier, subtree text, successor ids."""
    lines = []
    for vid in state.order:
        v = state.vertices[vid]
        successors = ",".join(str(s) for s in v.successors)
        lines.append(f"{v.vid}\t{v.frontier}\t{v.text}\t{successors}")
    return "\n".join(lines)
