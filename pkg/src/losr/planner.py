"""Spatial planner: grounds entity descriptions and validates actions.

Grounding is an ordered filter pipeline.  An entity's type picks the
candidate universe, color features filter it, spatial-relation children keep
candidates standing in the stated relation to some grounding of their
landmark, and indicator features keep the extremal candidates along a board
axis.  An action is executable only when its entity descriptions ground to
single candidates and its destination resolves to a single legal cell; the
parser leans on this to discard readings the scene cannot support.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional

from .trees import DESTINATION, ENTITY, EVENT, LosrNode, MEASURE, SEQUENCE, iter_nodes
from .world import Cell, Shape, WorldModel, can_place, pick_up, place_at

SHAPE = "shape"
STACK = "stack"
CELL = "cell"
REGION = "region"

NO_GROUNDING = "no-grounding"
AMBIGUOUS = "ambiguous"
PHYSICALLY_INVALID = "physically-invalid"
UNBOUND_REFERENCE = "unbound-reference"
OFF_BOARD = "off-board"


class PlannerError(ValueError):
    """Grounding or validation failure; .code is one of the planner codes."""

    def __init__(self, code: str, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.code = code
        self.details = details or {}


@dataclass(frozen=True)
class Grounding:
    """One concrete referent: a shape, a stack column, a cell or a region."""

    kind: str
    shape: Optional[Shape] = None
    column: tuple = ()
    cells: tuple = ()

    def sort_key(self):
        if self.kind == SHAPE:
            return (0, self.shape.x, self.shape.y, self.shape.z)
        if self.kind == STACK:
            base = self.column[0]
            return (1, base.x, base.y, 0)
        if self.kind == CELL:
            return (2, self.cells[0].x, self.cells[0].y, 0)
        return (3, min(self.cells), len(self.cells), 0)

    def describe(self) -> dict:
        """JSON-friendly summary for error details and the service."""
        if self.kind == SHAPE:
            s = self.shape
            return {"kind": SHAPE, "type": s.type, "color": s.color, "x": s.x, "y": s.y, "z": s.z}
        if self.kind == STACK:
            return {"kind": STACK, "x": self.column[0].x, "y": self.column[0].y, "height": len(self.column)}
        return {"kind": self.kind, "cells": [[c.x, c.y] for c in sorted(self.cells)]}


def shape_grounding(shape: Shape) -> Grounding:
    return Grounding(SHAPE, shape=shape)


def stack_grounding(column) -> Grounding:
    return Grounding(STACK, column=tuple(column))


def cell_grounding(cell: Cell) -> Grounding:
    return Grounding(CELL, cells=(cell,))


def region_grounding(cells) -> Grounding:
    return Grounding(REGION, cells=tuple(sorted(cells)))


@dataclass
class Binding:
    """What an id-carrying entity referred to, for later reference-id lookups."""

    entity_type: Optional[str] = None
    grounding: Optional[Grounding] = None


def anchor_cells(g: Grounding) -> tuple:
    """Board cells standing in for the grounding in planar relations."""
    if g.kind == SHAPE:
        return (g.shape.cell,)
    if g.kind == STACK:
        return (g.column[0].cell,)
    return g.cells


def anchor_z(g: Grounding) -> Optional[int]:
    if g.kind == SHAPE:
        return g.shape.z
    if g.kind == STACK:
        return g.column[-1].z
    return None


def member_cells(g: Grounding) -> tuple:
    """Cells a grounding occupies, for containment tests."""
    return anchor_cells(g)


# Directional offsets in board coordinates: left/right along x, front toward
# the viewer (smaller y), behind away.
_DIRECTION = {
    "left": (-1, 0),
    "right": (1, 0),
    "front": (0, -1),
    "behind": (0, 1),
}

_MEASURED_RELATIONS = frozenset(_DIRECTION)


def _measure_count(measure: Optional[LosrNode]) -> Optional[int]:
    if measure is None:
        return None
    unit = measure.feature_value("type")
    if unit != "tile":
        raise PlannerError(PHYSICALLY_INVALID, f"measure unit must be tile, got {unit!r}")
    return measure.feature_value("cardinal")


def relation_holds(relation: str, measure: Optional[LosrNode], a: Grounding, b: Grounding) -> bool:
    """Does candidate a stand in the relation to landmark b?

    Directional relations admit an exact tile measure; nearest is not a
    pairwise test (ground applies it to whole candidate sets) and is
    rejected here.
    """
    n = _measure_count(measure)
    if n is not None and relation not in _MEASURED_RELATIONS:
        raise PlannerError(PHYSICALLY_INVALID, f"relation {relation!r} does not admit a measure")
    if relation == "nearest":
        raise PlannerError(PHYSICALLY_INVALID, "nearest is a set filter, not a pairwise relation")

    if relation == "above":
        za, zb = anchor_z(a), anchor_z(b)
        if za is None:
            return False
        cells_b = set(anchor_cells(b))
        if zb is None:
            # Landmark is a cell or region: above means resting anywhere over it.
            return any(c in cells_b for c in anchor_cells(a))
        return any(c in cells_b for c in anchor_cells(a)) and za > zb
    if relation == "below":
        return relation_holds("above", None, b, a)
    if relation == "within":
        cells_b = set(member_cells(b))
        return all(c in cells_b for c in member_cells(a))
    if relation == "adjacent":
        for ca in anchor_cells(a):
            for cb in anchor_cells(b):
                if ca != cb and max(abs(ca.x - cb.x), abs(ca.y - cb.y)) <= 1:
                    return True
        return False
    if relation in _DIRECTION:
        dx, dy = _DIRECTION[relation]
        for ca in anchor_cells(a):
            for cb in anchor_cells(b):
                ox, oy = ca.x - cb.x, ca.y - cb.y
                if n is not None:
                    if (ox, oy) == (dx * n, dy * n):
                        return True
                else:
                    if (dx and oy == 0 and ox * dx > 0) or (dy and ox == 0 and oy * dy > 0):
                        return True
        return False
    raise PlannerError(PHYSICALLY_INVALID, f"unknown relation {relation!r}")


def _distance(a: Grounding, b: Grounding) -> float:
    best = math.inf
    for ca in anchor_cells(a):
        for cb in anchor_cells(b):
            best = min(best, math.hypot(ca.x - cb.x, ca.y - cb.y))
    return best


@functools.lru_cache(maxsize=1024)
def _universe(entity_type: Optional[str], world: WorldModel) -> list:
    # Worlds are immutable, so the universe for a type never changes;
    # callers only filter the list, never mutate it.
    n = world.board_size
    if entity_type in ("cube", "prism"):
        return [shape_grounding(s) for s in sorted(world.shapes, key=lambda s: (s.x, s.y, s.z)) if s.type == entity_type]
    if entity_type is None:
        return [shape_grounding(s) for s in sorted(world.shapes, key=lambda s: (s.x, s.y, s.z))]
    if entity_type == "stack":
        out = []
        for cell in world.cells():
            col = world.column(cell)
            if len(col) >= 2:
                out.append(stack_grounding(col))
        return out
    if entity_type == "tile":
        return [cell_grounding(c) for c in world.cells()]
    if entity_type == "corner":
        m = n - 1
        return [region_grounding([Cell(x, y)]) for x, y in ((0, 0), (m, 0), (0, m), (m, m))]
    if entity_type == "edge":
        rows = [
            [Cell(x, 0) for x in range(n)],
            [Cell(x, n - 1) for x in range(n)],
            [Cell(0, y) for y in range(n)],
            [Cell(n - 1, y) for y in range(n)],
        ]
        return [region_grounding(r) for r in rows]
    if entity_type in ("board", "region"):
        return [region_grounding(world.cells())]
    raise PlannerError(PHYSICALLY_INVALID, f"type {entity_type!r} has no candidate universe")


def _color_matches(g: Grounding, color: str) -> bool:
    if g.kind == SHAPE:
        return g.shape.color == color
    if g.kind == STACK:
        # Containment: the stack has a shape of that color somewhere.
        return any(s.color == color for s in g.column)
    return False


def _stack_colors_ordered(g: Grounding, colors: list) -> bool:
    """Colors must appear bottom-to-top as a subsequence of the column."""
    it = iter(s.color for s in g.column)
    return all(c in it for c in colors)


def _indicator_key(g: Grounding, indicator: str) -> float:
    cells = anchor_cells(g)
    cx = sum(c.x for c in cells) / len(cells)
    cy = sum(c.y for c in cells) / len(cells)
    z = anchor_z(g)
    if indicator == "left":
        return -cx
    if indicator == "right":
        return cx
    if indicator == "front":
        return -cy
    if indicator == "back":
        return cy
    if indicator == "top":
        return float(z if z is not None else 0)
    raise PlannerError(PHYSICALLY_INVALID, f"unknown indicator {indicator!r}")


def _parse_spatial_relation(sr: LosrNode):
    relation = sr.feature_value("relation")
    measure = None
    landmark = None
    for child in sr.children:
        if child.label == MEASURE:
            measure = child
        elif child.label == ENTITY:
            landmark = child
    return relation, measure, landmark


def ground(entity: LosrNode, world: WorldModel, bindings: Optional[dict] = None,
           ordered_stacks: bool = False) -> list:
    """All groundings of the entity, in deterministic board order.

    The result has set semantics; the list order (left-to-right, front-to-
    back, bottom-to-top) only serves reproducible error messages.  bindings
    maps id numbers to Binding records and is updated in place when an
    id-carrying entity grounds uniquely.
    """
    if bindings is None:
        bindings = {}
    entity_type = entity.feature_value("type")
    colors = entity.feature_values("color")
    indicators = entity.feature_values("indicator")
    relations = entity.children

    if entity_type == "reference":
        rid = entity.feature_value("reference-id")
        if rid is None or rid not in bindings:
            raise PlannerError(UNBOUND_REFERENCE, "reference has no resolved antecedent")
        binding = bindings[rid]
        extras = bool(colors or indicators or relations)
        if not extras:
            if binding.grounding is None:
                raise PlannerError(UNBOUND_REFERENCE, f"antecedent {rid} never grounded")
            return [binding.grounding]
        # Type anaphora: reuse the antecedent's type, reground with the
        # anaphor's own restrictions.
        if binding.entity_type is None:
            raise PlannerError(UNBOUND_REFERENCE, f"antecedent {rid} has no type to copy")
        entity_type = binding.entity_type

    candidates = _universe(entity_type, world)

    for color in colors:
        candidates = [g for g in candidates if _color_matches(g, color)]
    if ordered_stacks and len(colors) > 1:
        candidates = [g for g in candidates if g.kind != STACK or _stack_colors_ordered(g, colors)]

    for sr in relations:
        relation, measure, landmark = _parse_spatial_relation(sr)
        if landmark is None:
            raise PlannerError(NO_GROUNDING, f"spatial-relation {relation!r} lacks a landmark")
        landmarks = ground(landmark, world, bindings, ordered_stacks)
        if relation == "nearest":
            if measure is not None:
                raise PlannerError(PHYSICALLY_INVALID, "nearest does not admit a measure")
            if not landmarks or not candidates:
                candidates = []
            else:
                dists = [min(_distance(g, lm) for lm in landmarks) for g in candidates]
                best = min(dists)
                candidates = [g for g, d in zip(candidates, dists) if d == best]
        else:
            candidates = [
                g for g in candidates
                if any(relation_holds(relation, measure, g, lm) for lm in landmarks)
            ]

    for indicator in indicators:
        if not candidates:
            break
        keys = [_indicator_key(g, indicator) for g in candidates]
        best = max(keys)
        candidates = [g for g, k in zip(candidates, keys) if k == best]

    candidates = sorted(candidates, key=Grounding.sort_key)
    ident = entity.feature_value("id")
    if ident is not None and len(candidates) == 1:
        binding = bindings.setdefault(ident, Binding())
        binding.grounding = candidates[0]
        if binding.entity_type is None:
            binding.entity_type = entity_type
    return candidates


@dataclass(frozen=True)
class PlanStep:
    op: str  # "pick" or "place"
    cell: Cell


@dataclass(frozen=True)
class Plan:
    steps: tuple = ()


def _require_unique(groundings: list, what: str) -> Grounding:
    if not groundings:
        raise PlannerError(NO_GROUNDING, f"nothing in the scene matches the {what}")
    if len(groundings) > 1:
        raise PlannerError(
            AMBIGUOUS,
            f"the {what} matches {len(groundings)} candidates",
            {"candidates": [g.describe() for g in groundings]},
        )
    return groundings[0]


def resolve_destination(dest: LosrNode, world: WorldModel, bindings: dict,
                        ordered_stacks: bool = False) -> list:
    """Legal placement cells the destination describes, deduplicated and sorted."""
    sr = dest.children[0]
    relation, measure, landmark = _parse_spatial_relation(sr)
    if landmark is None:
        raise PlannerError(NO_GROUNDING, "destination lacks a landmark")
    landmarks = ground(landmark, world, bindings, ordered_stacks)
    if not landmarks:
        raise PlannerError(NO_GROUNDING, "nothing in the scene matches the destination landmark")
    n = _measure_count(measure)

    cells: list = []
    off_board = 0
    if relation == "above":
        if n is not None:
            raise PlannerError(PHYSICALLY_INVALID, "above does not admit a measure")
        for lm in landmarks:
            cells.extend(anchor_cells(lm))
    elif relation in _DIRECTION:
        dx, dy = _DIRECTION[relation]
        step = n if n is not None else 1
        for lm in landmarks:
            for c in anchor_cells(lm):
                target = Cell(c.x + dx * step, c.y + dy * step)
                if world.in_bounds(target):
                    cells.append(target)
                else:
                    off_board += 1
    elif relation == "within":
        if n is not None:
            raise PlannerError(PHYSICALLY_INVALID, "within does not admit a measure")
        for lm in landmarks:
            cells.extend(member_cells(lm))
    elif relation == "adjacent":
        if n is not None:
            raise PlannerError(PHYSICALLY_INVALID, "adjacent does not admit a measure")
        for lm in landmarks:
            for c in anchor_cells(lm):
                for dx2 in (-1, 0, 1):
                    for dy2 in (-1, 0, 1):
                        if dx2 == dy2 == 0:
                            continue
                        t = Cell(c.x + dx2, c.y + dy2)
                        if world.in_bounds(t):
                            cells.append(t)
    else:
        raise PlannerError(PHYSICALLY_INVALID, f"cannot place {relation!r} a landmark")

    legal = sorted({c for c in cells if can_place(world, c)})
    if not legal:
        if off_board and not cells:
            raise PlannerError(OFF_BOARD, "the destination falls off the board")
        raise PlannerError(PHYSICALLY_INVALID, "no legal placement cell at the destination")
    return legal


def _theme_and_destination(event: LosrNode):
    theme = None
    dest = None
    for child in event.children:
        if child.label == ENTITY and theme is None:
            theme = child
        elif child.label == DESTINATION and dest is None:
            dest = child
    return theme, dest


def _is_identity_reference(entity: LosrNode) -> bool:
    return (
        entity.feature_value("type") == "reference"
        and not entity.feature_values("color")
        and not entity.feature_values("indicator")
        and not entity.children
    )


def _check_payload(entity: LosrNode, world: WorldModel, bindings: dict,
                   ordered_stacks: bool = False) -> None:
    """The drop theme must describe what the gripper holds.

    Restrictive modifiers are checked against the shape's situation as it
    was grounded before the pick-up, so 'drop the prism that was on the
    cube' style readings must actually hold of the held shape.
    """
    held = world.gripper
    antecedent = None
    if _is_identity_reference(entity):
        rid = entity.feature_value("reference-id")
        if rid is None or rid not in bindings:
            raise PlannerError(UNBOUND_REFERENCE, "reference has no resolved antecedent")
        b = bindings[rid]
        if b.grounding is not None and b.grounding.kind == SHAPE:
            s = b.grounding.shape
            if (s.type, s.color) != (held.type, held.color):
                raise PlannerError(PHYSICALLY_INVALID, "the gripper does not hold the referenced shape")
            return
        if b.entity_type is not None and b.entity_type != held.type:
            raise PlannerError(PHYSICALLY_INVALID, "the gripper does not hold the referenced shape")
        return
    entity_type = entity.feature_value("type")
    if entity_type == "reference":
        rid = entity.feature_value("reference-id")
        if rid is None or rid not in bindings:
            raise PlannerError(UNBOUND_REFERENCE, "reference has no resolved antecedent")
        entity_type = bindings[rid].entity_type
        antecedent = bindings[rid].grounding
    if entity_type is not None and entity_type != held.type:
        raise PlannerError(PHYSICALLY_INVALID, f"the gripper holds a {held.type}, not a {entity_type}")
    for color in entity.feature_values("color"):
        if color != held.color:
            raise PlannerError(PHYSICALLY_INVALID, f"the gripper holds a {held.color} shape, not {color}")
    for sr in entity.children:
        relation, measure, landmark = _parse_spatial_relation(sr)
        if landmark is None:
            raise PlannerError(NO_GROUNDING, f"spatial-relation {relation!r} lacks a landmark")
        if antecedent is None:
            raise PlannerError(PHYSICALLY_INVALID,
                               "cannot check a relation against the held shape")
        landmarks = ground(landmark, world, bindings, ordered_stacks)
        if not any(relation_holds(relation, measure, antecedent, lm) for lm in landmarks):
            raise PlannerError(NO_GROUNDING, "the held shape does not satisfy the stated relation")


def validate_action(event: LosrNode, world: WorldModel, bindings: Optional[dict] = None,
                    ordered_stacks: bool = False) -> Plan:
    """Check one event against the world and return its motion plan.

    take: unique shape grounding, on top of its column, gripper free.
    drop: gripper holds the described shape, unique legal destination cell.
    move: take followed by drop, with the destination resolved against the
    world as it stands after the pick-up.
    """
    if bindings is None:
        bindings = {}
    action = event.feature_value("action")
    theme, dest = _theme_and_destination(event)

    if action == "take":
        if dest is not None:
            raise PlannerError(PHYSICALLY_INVALID, "take does not accept a destination")
        if theme is None:
            raise PlannerError(NO_GROUNDING, "take requires a theme entity")
        g = _require_unique(ground(theme, world, bindings, ordered_stacks), "theme")
        return Plan((_pick_step(g, world),))

    if action == "drop":
        if world.gripper is None:
            raise PlannerError(PHYSICALLY_INVALID, "the gripper holds nothing to drop")
        if dest is None:
            raise PlannerError(PHYSICALLY_INVALID, "drop requires a destination")
        if theme is not None:
            _check_payload(theme, world, bindings, ordered_stacks)
        cells = resolve_destination(dest, world, bindings, ordered_stacks)
        cell = _require_unique_cell(cells)
        return Plan((PlanStep("place", cell),))

    if action == "move":
        if theme is None:
            raise PlannerError(NO_GROUNDING, "move requires a theme entity")
        if dest is None:
            raise PlannerError(PHYSICALLY_INVALID, "move requires a destination")
        g = _require_unique(ground(theme, world, bindings, ordered_stacks), "theme")
        pick = _pick_step(g, world)
        lifted = pick_up(world, pick.cell)
        cells = resolve_destination(dest, lifted, bindings, ordered_stacks)
        cell = _require_unique_cell(cells)
        return Plan((pick, PlanStep("place", cell)))

    raise PlannerError(PHYSICALLY_INVALID, f"unknown action {action!r}")


def _pick_step(g: Grounding, world: WorldModel) -> PlanStep:
    if g.kind != SHAPE:
        raise PlannerError(PHYSICALLY_INVALID, f"cannot pick up a {g.kind}")
    if world.gripper is not None:
        raise PlannerError(PHYSICALLY_INVALID, "the gripper already holds a shape")
    top = world.top_shape(g.shape.cell)
    if top != g.shape:
        raise PlannerError(PHYSICALLY_INVALID, "the shape is buried under another shape")
    return PlanStep("pick", g.shape.cell)


def _require_unique_cell(cells: list) -> Cell:
    if len(cells) > 1:
        raise PlannerError(
            AMBIGUOUS,
            f"the destination matches {len(cells)} cells",
            {"cells": [[c.x, c.y] for c in cells]},
        )
    return cells[0]


def apply_plan(world: WorldModel, plan: Plan) -> WorldModel:
    for step in plan.steps:
        if step.op == "pick":
            world = pick_up(world, step.cell)
        elif step.op == "place":
            world = place_at(world, step.cell)
        else:
            raise PlannerError(PHYSICALLY_INVALID, f"unknown plan step {step.op!r}")
    return world


def _collect_bindings(root: LosrNode) -> dict:
    """Pre-pass: antecedent types for every id in the tree.

    An anaphor may sit inside its own antecedent's restriction, so types
    must be known before any grounding runs.
    """
    bindings: dict = {}
    for _, node in iter_nodes(root):
        if node.label == ENTITY:
            ident = node.feature_value("id")
            if ident is not None:
                bindings[ident] = Binding(entity_type=node.feature_value("type"))
    return bindings


def events_of(root: LosrNode) -> list:
    if root.label == SEQUENCE:
        return list(root.children)
    if root.label == EVENT:
        return [root]
    raise PlannerError(PHYSICALLY_INVALID, f"cannot execute a {root.label}")


def execute_sequence(root: LosrNode, world: WorldModel, ordered_stacks: bool = False) -> WorldModel:
    """Validate and apply every event in order; raises on the first failure."""
    bindings = _collect_bindings(root)
    for index, event in enumerate(events_of(root)):
        try:
            plan = validate_action(event, world, bindings, ordered_stacks)
        except PlannerError as exc:
            exc.details.setdefault("event", index)
            raise
        world = apply_plan(world, plan)
    return world


def grounding_map(root: LosrNode, world: WorldModel, ordered_stacks: bool = False) -> dict:
    """Item paths of entity nodes mapped to their groundings, for display.

    Each entity is grounded against the world state at the start of its
    event (after the pick-up, for entities under a move destination), so the
    map mirrors what execution saw.  Entities that fail to ground map to an
    empty list rather than raising.
    """
    bindings = _collect_bindings(root)
    result: dict = {}
    events = events_of(root)
    root_paths = {0: ()} if root.label == EVENT else {}
    if root.label == SEQUENCE:
        root_paths = {i: (i,) for i, _ in enumerate(root.items)}

    for index, event in enumerate(events):
        base = root_paths.get(index, (index,))
        action = event.feature_value("action")
        try:
            plan = validate_action(event, world, bindings, ordered_stacks)
        except PlannerError:
            plan = None
        for i, item in enumerate(event.items):
            if not isinstance(item, LosrNode):
                continue
            stage_world = world
            if item.label == DESTINATION and action == "move" and plan is not None:
                stage_world = apply_plan(world, Plan(plan.steps[:1]))
            for path, node in iter_nodes(item, base + (i,)):
                if node.label == ENTITY:
                    try:
                        result[path] = ground(node, stage_world, bindings, ordered_stacks)
                    except PlannerError:
                        result[path] = []
        if plan is not None:
            world = apply_plan(world, plan)
    return result
