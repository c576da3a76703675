"""Grid world state for the spatial planner.

The board is an n-by-n grid of unit tiles.  Shapes are unit cubes and prisms
at integer coordinates: x grows rightward, y grows away from the viewer (so
front means smaller y) and z grows upward from the board surface at z = 0.
Worlds are immutable; pick_up and place_at return new worlds, which keeps
planner search and undo history trivial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

CUBE = "cube"
PRISM = "prism"
SHAPE_TYPES = (CUBE, PRISM)

DEFAULT_BOARD_SIZE = 8


class WorldError(ValueError):
    """A physically impossible mutation; .code is machine-readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class Cell(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Shape:
    type: str
    color: str
    x: int
    y: int
    z: int

    @property
    def cell(self) -> Cell:
        return Cell(self.x, self.y)


@dataclass(frozen=True)
class HeldShape:
    """Shape in the gripper: type and color only, no board position."""

    type: str
    color: str


@dataclass(frozen=True)
class WorldModel:
    board_size: int = DEFAULT_BOARD_SIZE
    shapes: frozenset = field(default_factory=frozenset)
    gripper: Optional[HeldShape] = None

    def column(self, cell: Cell) -> list:
        """Shapes stacked on the cell, ordered bottom to top."""
        return sorted((s for s in self.shapes if s.cell == cell), key=lambda s: s.z)

    def top_shape(self, cell: Cell) -> Optional[Shape]:
        col = self.column(cell)
        return col[-1] if col else None

    def cells(self) -> list:
        return [Cell(x, y) for y in range(self.board_size) for x in range(self.board_size)]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell.x < self.board_size and 0 <= cell.y < self.board_size


def validate(world: WorldModel) -> list:
    """Invariant violations as human-readable strings; empty means clean."""
    problems = []
    seen = {}
    for s in sorted(world.shapes, key=lambda s: (s.x, s.y, s.z)):
        if s.type not in SHAPE_TYPES:
            problems.append(f"unknown shape type {s.type!r} at ({s.x},{s.y},{s.z})")
        if not (0 <= s.x < world.board_size and 0 <= s.y < world.board_size) or s.z < 0:
            problems.append(f"shape out of bounds at ({s.x},{s.y},{s.z})")
        key = (s.x, s.y, s.z)
        if key in seen:
            problems.append(f"two shapes occupy ({s.x},{s.y},{s.z})")
        seen[key] = s
    for (x, y, z), s in sorted(seen.items()):
        if z > 0:
            below = seen.get((x, y, z - 1))
            if below is None:
                problems.append(f"floating shape at ({x},{y},{z})")
            elif below.type != CUBE:
                problems.append(f"shape at ({x},{y},{z}) rests on a {below.type}")
    return problems


def pick_up(world: WorldModel, cell: Cell) -> WorldModel:
    """Remove the top shape of the column into the gripper."""
    if world.gripper is not None:
        raise WorldError("gripper-occupied", "the gripper already holds a shape")
    if not world.in_bounds(cell):
        raise WorldError("off-board", f"cell {tuple(cell)} is off the board")
    top = world.top_shape(cell)
    if top is None:
        raise WorldError("empty-column", f"nothing to pick up at {tuple(cell)}")
    return replace(
        world,
        shapes=world.shapes - {top},
        gripper=HeldShape(top.type, top.color),
    )


def place_at(world: WorldModel, cell: Cell) -> WorldModel:
    """Drop the held shape on top of the column (or the board surface)."""
    if world.gripper is None:
        raise WorldError("gripper-empty", "the gripper holds nothing")
    if not world.in_bounds(cell):
        raise WorldError("off-board", f"cell {tuple(cell)} is off the board")
    top = world.top_shape(cell)
    if top is not None and top.type != CUBE:
        raise WorldError("unsupported-placement", f"cannot stack on a {top.type}")
    z = top.z + 1 if top is not None else 0
    held = world.gripper
    return replace(
        world,
        shapes=world.shapes | {Shape(held.type, held.color, cell.x, cell.y, z)},
        gripper=None,
    )


def can_place(world: WorldModel, cell: Cell) -> bool:
    """True if place_at would succeed for a held shape at this cell."""
    if not world.in_bounds(cell):
        return False
    top = world.top_shape(cell)
    return top is None or top.type == CUBE


def scenes_equal(a: WorldModel, b: WorldModel) -> bool:
    return a.board_size == b.board_size and a.shapes == b.shapes and a.gripper == b.gripper


def scene_to_json(world: WorldModel) -> dict:
    shapes = sorted(world.shapes, key=lambda s: (s.x, s.y, s.z))
    data = {
        "board_size": world.board_size,
        "shapes": [{"type": s.type, "color": s.color, "x": s.x, "y": s.y, "z": s.z} for s in shapes],
        "gripper": None,
    }
    if world.gripper is not None:
        data["gripper"] = {"type": world.gripper.type, "color": world.gripper.color}
    return data


def scene_from_json(data: dict) -> WorldModel:
    try:
        shapes = frozenset(
            Shape(s["type"], s["color"], int(s["x"]), int(s["y"]), int(s["z"]))
            for s in data["shapes"]
        )
        gripper = data.get("gripper")
        held = HeldShape(gripper["type"], gripper["color"]) if gripper else None
        world = WorldModel(int(data["board_size"]), shapes, held)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad scene JSON: {exc}") from exc
    problems = validate(world)
    if problems:
        raise ValueError("invalid scene: " + "; ".join(problems))
    return world


def dumps_scene(world: WorldModel) -> str:
    return json.dumps(scene_to_json(world), separators=(", ", ": "))


def loads_scene(text: str) -> WorldModel:
    return scene_from_json(json.loads(text))
