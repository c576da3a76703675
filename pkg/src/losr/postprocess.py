"""Anaphora resolution and planner-backed scoring of parse forests.

Candidate trees come out of the parser with unresolved references.  Each
anaphor is bound to an antecedent entity, the tree is executed against the
scene, and the survivors are ranked by the product of the lexicon weights
their leaves carried at shift time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .gss import NoParseError, ParseForest
from .planner import PlannerError, execute_sequence
from .trees import ENTITY, Feature, LosrNode, SEQUENCE, iter_nodes
from .world import WorldError, WorldModel

SCORED = "scored"
RANDOM = "random"
FIRST = "first"


class AnaphoraError(ValueError):
    """An anaphor could not be bound to an antecedent."""


class AllParsesRejectedError(ValueError):
    """Every candidate tree failed resolution or execution."""

    def __init__(self, parses):
        super().__init__("the planner rejected every parse")
        self.parses = parses


class NoUniqueParseError(ValueError):
    """More than one verified parse under selection mode 'first'."""

    def __init__(self, count: int):
        super().__init__(f"{count} verified parses but selection requires exactly one")
        self.count = count


def _entity_nodes(tree: LosrNode) -> list:
    return [(path, node) for path, node in iter_nodes(tree) if node.label == ENTITY]


def _is_anaphor(node: LosrNode) -> bool:
    return node.feature_value("type") == "reference"


def _theme_path(tree: LosrNode, event_index: int) -> Optional[tuple]:
    event = tree.items[event_index]
    for i, item in enumerate(event.items):
        if isinstance(item, LosrNode) and item.label == ENTITY:
            return (event_index, i)
    return None


def _pattern_antecedent(tree: LosrNode, anaphor_path: tuple) -> Optional[tuple]:
    """Take-then-place pattern: the theme of a later event binds to the
    previous event's theme when that event took or moved something."""
    if tree.label != SEQUENCE or len(anaphor_path) != 2:
        return None
    event_index = anaphor_path[0]
    if event_index < 1 or anaphor_path != _theme_path(tree, event_index):
        return None
    previous = tree.items[event_index - 1]
    if previous.feature_value("action") not in ("take", "move"):
        return None
    theme = _theme_path(tree, event_index - 1)
    if theme is None:
        return None
    node = tree.items[theme[0]].items[theme[1]]
    if _is_anaphor(node):
        return None
    return theme


def resolve_anaphora(tree: LosrNode) -> LosrNode:
    """Bind every unresolved reference and return the annotated tree.

    The antecedent gains an (id: n) feature in front of its items and the
    anaphor a (reference-id: n) behind its own.  Already-resolved anaphors
    are left alone, so resolution is idempotent.  Raises AnaphoraError when
    no antecedent precedes an anaphor.
    """
    entities = _entity_nodes(tree)
    anaphors = [
        (path, node) for path, node in entities
        if _is_anaphor(node) and node.feature_value("reference-id") is None
    ]
    if not anaphors:
        return tree

    order = {path: i for i, (path, _) in enumerate(entities)}
    ids_in_use = [node.feature_value("id") for _, node in entities if node.feature_value("id") is not None]
    next_id = max(ids_in_use, default=0) + 1

    prepends: dict = {}
    appends: dict = {}
    assigned: dict = {}

    for path, node in anaphors:
        antecedent_path = _pattern_antecedent(tree, path)
        if antecedent_path is None:
            index = order[path]
            preceding = [
                (p, n) for (p, n) in entities[:index]
                if not _is_anaphor(n)
            ]
            if not preceding:
                raise AnaphoraError("no antecedent precedes the reference")
            antecedent_path = preceding[-1][0]
        antecedent = tree
        for step in antecedent_path:
            antecedent = antecedent.items[step]
        if antecedent_path in assigned:
            number = assigned[antecedent_path]
        else:
            existing = antecedent.feature_value("id")
            if existing is not None:
                number = existing
            else:
                number = next_id
                next_id += 1
                prepends[antecedent_path] = [Feature("id", number)]
            assigned[antecedent_path] = number
        appends[path] = [Feature("reference-id", number)]

    resolved, _ = _rebuild(tree, (), prepends, appends)
    return resolved


def _rebuild(node: LosrNode, path: tuple, prepends: dict, appends: dict):
    """Reconstruct only the spine above edited nodes, reusing every
    untouched subtree object."""
    items = []
    changed = False
    for i, item in enumerate(node.items):
        if isinstance(item, LosrNode):
            new_item, item_changed = _rebuild(item, path + (i,), prepends, appends)
            changed = changed or item_changed
            items.append(new_item)
        else:
            items.append(item)
    pre = prepends.get(path)
    post = appends.get(path)
    if pre or post:
        items = list(pre or ()) + items + list(post or ())
        changed = True
    if not changed:
        return node, False
    return LosrNode(node.label, tuple(items)), True


@dataclass
class ScoredParse:
    tree: LosrNode
    raw_tree: LosrNode
    score: float
    verified: bool
    failure: Optional[Exception] = None
    result_world: Optional[WorldModel] = None
    tie: bool = False


@dataclass
class Selection:
    chosen: ScoredParse
    parses: list = field(default_factory=list)

    @property
    def verified(self) -> list:
        return [p for p in self.parses if p.verified]


def verify_and_score(forest: ParseForest, world: WorldModel, selection: str = SCORED,
                     seed: int = 0, ordered_stacks: bool = False) -> Selection:
    """Resolve, execute and rank every tree in the forest, then pick one.

    scored takes the weight-product argmax (ties flagged, broken toward the
    smaller canonical text); random draws uniformly from the verified trees
    with the given seed; first demands a single verified tree.
    """
    if not forest.trees:
        raise NoParseError("the forest is empty")
    parses = []
    for parsed in forest.trees:
        resolved = parsed.tree
        failure = None
        result_world = None
        try:
            resolved = resolve_anaphora(parsed.tree)
            result_world = execute_sequence(resolved, world, ordered_stacks)
            verified = True
        except (AnaphoraError, PlannerError, WorldError) as exc:
            verified = False
            failure = exc
        parses.append(ScoredParse(resolved, parsed.tree, parsed.score, verified,
                                  failure, result_world))
    parses.sort(key=lambda p: (-p.score, p.tree.text))
    survivors = [p for p in parses if p.verified]
    if not survivors:
        raise AllParsesRejectedError(parses)

    if selection == SCORED:
        chosen = survivors[0]
        chosen.tie = len(survivors) > 1 and survivors[1].score == chosen.score
    elif selection == RANDOM:
        rng = random.Random(seed)
        chosen = rng.choice(sorted(survivors, key=lambda p: p.tree.text))
    elif selection == FIRST:
        if len(survivors) > 1:
            raise NoUniqueParseError(len(survivors))
        chosen = survivors[0]
    else:
        raise ValueError(f"unknown selection mode {selection!r}")
    return Selection(chosen, parses)
